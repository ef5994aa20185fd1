# -*- coding: utf-8 -*-

"""
propclass.tensorcore.gradcheck
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Compares tape gradients with central finite differences.
"""

import collections
import logging

import numpy as np

from ..exceptions import GradCheckFailed
from .tensor import Tape, backward

log = logging.getLogger(__name__)

ERROR_FLOOR = 1e-4

GradSample = collections.namedtuple("GradSample", ["name", "index", "analytic", "numeric", "error"])


def relative_error(analytic, numeric, floor=ERROR_FLOOR):
    """|a - n| / max(|a|, |n|, floor)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def numeric_gradient(loss_fn, tensor, index, step=1e-6):
    """(f(x + step) - f(x - step)) / (2 step) at one element, restoring the element afterwards.

    :param loss_fn: A callable returning the scalar loss Tensor.
    :param tensor: The parameter tensor to perturb.
    :param index: The element index, as a tuple.
    """
    original = tensor.data[index]
    try:
        tensor.data[index] = original + step
        plus = loss_fn().item()
        tensor.data[index] = original - step
        minus = loss_fn().item()
    finally:
        tensor.data[index] = original
    return (plus - minus) / (2.0 * step)


def sample_indices(params, count, rng):
    """Draws about `count` (name, index) pairs, the same number from every parameter group.

    :type params: ParamStore
    :type rng: numpy.random.Generator
    :rtype: list(tuple(str, tuple))
    """
    groups = params.groups()
    per_group = int(np.ceil(count / float(len(groups))))
    picks = []
    for names in groups.values():
        sizes = np.array([params[name].size for name in names])
        flat = rng.choice(sizes.sum(), size=min(per_group, sizes.sum()), replace=False)
        bounds = np.cumsum(sizes)
        for position in sorted(flat):
            which = int(np.searchsorted(bounds, position, side="right"))
            offset = int(position - (bounds[which - 1] if which else 0))
            name = names[which]
            picks.append((name, np.unravel_index(offset, params[name].shape)))
    return picks


def check_gradients(loss_fn, params, count=200, rng=None, step=1e-6, tolerance=1e-4):
    """Checks tape gradients of `loss_fn` against finite differences on sampled parameter elements.

    `loss_fn` must be deterministic: it is called once under a tape and twice per sampled element without one.

    :param loss_fn: A callable returning the scalar loss Tensor.
    :param params: The parameters.
    :type params: ParamStore
    :param count: The number of elements to sample.
    :param rng: The sampling generator.
    :param step: The finite-difference step.
    :param tolerance: The largest acceptable relative error.
    :raise GradCheckFailed: Raises with the worst element when its error exceeds `tolerance`.
    :return: Every sample, worst first.
    :rtype: list(GradSample)
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    params.zero_grad()
    with Tape():
        loss = loss_fn()
        backward(loss)
    samples = []
    for name, index in sample_indices(params, count, rng):
        analytic = float(params[name].grad[index])
        numeric = numeric_gradient(loss_fn, params[name], index, step)
        samples.append(GradSample(name, tuple(int(i) for i in index), analytic, numeric,
                                  relative_error(analytic, numeric)))
    samples.sort(key=lambda s: s.error, reverse=True)
    worst = samples[0]
    log.info("Checked %d gradients; worst relative error %.3e at %s%s", len(samples), worst.error, worst.name,
             list(worst.index))
    if worst.error > tolerance:
        raise GradCheckFailed("{0}{1}".format(worst.name, list(worst.index)), worst.error, tolerance)
    return samples
