# -*- coding: utf-8 -*-

"""
propclass.serializers
~~~~~~~~~~~~~~~~~~~~~

JSON and JSON Lines serialization helpers for corpora, graphs, predictions and reports.
"""

import io
import os
import tempfile

import numpy as np

use_rapidjson = False
try:
    import rapidjson

    use_rapidjson = True
except ImportError:
    pass
import json

from propclass import dates
from propclass.exceptions import ParseError

MAX_LINE_BYTES = 1024 * 1024


def json_serialize(obj, indent=None):
    if use_rapidjson:
        return rapidjson.dumps(obj, default=object_serializer, indent=indent, ensure_ascii=False)
    if indent is None:
        return json.dumps(obj, default=object_serializer, separators=(",", ":"), ensure_ascii=False)
    return json.dumps(obj, default=object_serializer, indent=indent, ensure_ascii=False)


def json_deserialize(json_str):
    if use_rapidjson:
        return rapidjson.loads(json_str)
    return json.loads(json_str)


def object_serializer(obj):
    """Helper to serialize values the JSON encoders don't know about.

    :param obj: The object.
    """
    if hasattr(obj, "isoformat"):
        return dates.format_iso_datetime(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError("Object of type {0} is not JSON serializable".format(type(obj).__name__))


def read_json(path):
    """Reads a single JSON document.

    :param path: The file path.
    :raise ParseError: Raises when the document is not valid JSON.
    :return: The decoded document.
    """
    with io.open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        return json_deserialize(text)
    except ValueError as exception:
        raise ParseError(1, str(exception))


def write_json(path, obj):
    """Writes a single JSON document atomically."""
    atomic_write_text(path, json_serialize(obj, indent=2) + "\n")


def read_jsonl(path):
    """Reads a JSON Lines file, yielding (line number, object) pairs. Blank lines are skipped.

    :param path: The file path.
    :raise ParseError: Raises on an oversized or undecodable line.
    """
    with io.open(path, "rb") as f:
        for line_no, raw in enumerate(f, start=1):
            if len(raw) > MAX_LINE_BYTES:
                raise ParseError(line_no, "line longer than {0} bytes".format(MAX_LINE_BYTES))
            try:
                line = raw.decode("utf-8").strip()
            except UnicodeDecodeError as exception:
                raise ParseError(line_no, str(exception))
            if not line:
                continue
            try:
                yield line_no, json_deserialize(line)
            except ValueError as exception:
                raise ParseError(line_no, str(exception))


def write_jsonl(path, objects):
    """Writes one JSON object per line, atomically.

    :param path: The file path.
    :param objects: An iterable of JSON-serializable objects.
    """
    lines = [json_serialize(obj) + "\n" for obj in objects]
    atomic_write_text(path, "".join(lines))


def atomic_write_text(path, text):
    """Writes text to a temporary file next to `path`, then moves it into place.

    :param path: The destination path.
    :param text: The text content, written as UTF-8.
    """
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_bytes(path, payload):
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        os.makedirs(directory)
    handle, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with io.open(handle, "wb") as f:
            f.write(payload)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
