# -*- coding: utf-8 -*-

"""
propclass.runs
~~~~~~~~~~~~~~

Seed derivation and run manifests. Every command derives all of its random streams from a single seed, and
writes a manifest next to each output so the output can be reproduced from the manifest alone.
"""

import hashlib
import sys

import numpy as np

from . import __title__, __version__
from . import dates
from .serializers import write_json


def derive_seed(seed, label):
    """Derives a sub-seed from a seed and a fixed label.

    :param seed: The invocation seed.
    :type seed: int
    :param label: The name of the random stream (for example, "dropout" or "split").
    :type label: str
    :return: A 63-bit seed.
    :rtype: int
    """
    digest = hashlib.sha256("{0}:{1}".format(int(seed), label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFFFFFFFFFFFFFF


def rng(seed, label):
    """A numpy Generator seeded from a derived seed.

    :rtype: numpy.random.Generator
    """
    return np.random.default_rng(derive_seed(seed, label))


class RunManifest(object):
    """What was run, with which configuration, from which inputs, to which outputs."""

    def __init__(self, subcommand, config=None, inputs=None, outputs=None, seed=None):
        """Initialize the RunManifest object. The clock starts now.

        :param subcommand: The subcommand name.
        :param config: The resolved configuration, as a dict.
        :param inputs: Input paths, by role.
        :param outputs: Output paths, by role.
        :param seed: The invocation seed.
        """
        self.subcommand = subcommand
        self.config = config or {}
        self.inputs = inputs or {}
        self.outputs = outputs or {}
        self.seed = seed
        self.started_at = dates.utc_now()

    def to_dict(self):
        return dict(
            subcommand=self.subcommand,
            config=self.config,
            inputs=self.inputs,
            outputs=self.outputs,
            seed=self.seed,
            tool="{0}/{1}".format(__title__, __version__),
            python="{0[0]}.{0[1]}.{0[2]}".format(sys.version_info),
            started_at=self.started_at,
            wall_time=dates.elapsed_seconds(self.started_at),
        )

    def write(self, output_path):
        """Writes the manifest atomically as `<output_path>.manifest.json`.

        :return: The manifest path.
        :rtype: str
        """
        path = manifest_path(output_path)
        write_json(path, self.to_dict())
        return path


def manifest_path(output_path):
    return "{0}.manifest.json".format(output_path.rstrip("/\\"))
