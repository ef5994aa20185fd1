# -*- coding: utf-8 -*-

"""
propclass.tensorcore.checkpoint
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

A single-file binary checkpoint: a magic tag, a length-prefixed JSON header, then every parameter as
little-endian float64 in name order.
"""

import io
import struct

import numpy as np

from ..exceptions import ParseError
from ..serializers import atomic_write_bytes, json_deserialize, json_serialize

MAGIC = b"PCLSCKPT"
VERSION = 1


def save_checkpoint(path, params, meta=None):
    """Writes parameters and metadata atomically.

    :param path: The checkpoint path.
    :param params: The parameters.
    :type params: ParamStore
    :param meta: JSON-serializable metadata stored in the header.
    :type meta: dict or None
    """
    entries = []
    blobs = []
    offset = 0
    for name, tensor in params.items():
        blob = np.ascontiguousarray(tensor.data, dtype="<f8").tobytes()
        entries.append(dict(name=name, shape=list(tensor.shape), offset=offset, nbytes=len(blob)))
        blobs.append(blob)
        offset += len(blob)
    header = json_serialize(dict(version=VERSION, params=entries, meta=meta or {})).encode("utf-8")
    atomic_write_bytes(path, MAGIC + struct.pack("<Q", len(header)) + header + b"".join(blobs))


def load_checkpoint(path):
    """Reads a checkpoint written by `save_checkpoint()`.

    :param path: The checkpoint path.
    :raise ParseError: Raises on a bad tag, version or truncated file.
    :return: The parameter arrays by name, and the metadata.
    :rtype: tuple(dict, dict)
    """
    with io.open(path, "rb") as f:
        payload = f.read()
    if payload[: len(MAGIC)] != MAGIC:
        raise ParseError(1, "not a propclass checkpoint")
    start = len(MAGIC) + 8
    (header_len,) = struct.unpack("<Q", payload[len(MAGIC) : start])
    try:
        header = json_deserialize(payload[start : start + header_len].decode("utf-8"))
    except ValueError as exception:
        raise ParseError(1, "bad checkpoint header: {0}".format(exception))
    if header.get("version") != VERSION:
        raise ParseError(1, "unsupported checkpoint version {0}".format(header.get("version")))
    body = payload[start + header_len :]
    arrays = {}
    for entry in header["params"]:
        end = entry["offset"] + entry["nbytes"]
        if end > len(body):
            raise ParseError(1, "checkpoint truncated at '{0}'".format(entry["name"]))
        values = np.frombuffer(body[entry["offset"] : end], dtype="<f8")
        arrays[entry["name"]] = values.reshape(entry["shape"]).astype(np.float64)
    return dict(sorted(arrays.items())), header["meta"]
