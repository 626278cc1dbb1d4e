"""Deterministic serialization helpers.

Every file this package writes must be byte-reproducible: same inputs
and seed, same bytes.  That rules out ``json.dumps`` default float
handling (repr — shortest round-trip, fine, but we promise a fixed 17
significant digits everywhere) and non-atomic writes.  The tiny JSON
writer here keeps dict insertion order, renders floats at 17 ueful
digits, and knows how to embed pre-rendered decimal strings.
"""

from __future__ import annotations

import hashlib
import os
import tempfile


def format_float(x):
    """Render a float at 17 significant digits (round-trip lossless)."""
    if x != x:  # NaN
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def canonical_json(obj, indent=None, _level=0):
    """Serialize ``obj`` to JSON text with 17-digit floats.

    Dicts keep insertion order (callers build them schema-order);
    strings are JSON-escaped via the stdlib.  ``indent`` of None gives
    compact output; an int pretty-prints (still deterministic).
    """
    import json

    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    nl, pad, pad_in = "", "", ""
    if indent is not None:
        nl = "\n"
        pad = " " * (indent * _level)
        pad_in = " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k, v in obj.items():
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be str, got {type(k)}")
            items.append(f"{pad_in}{json.dumps(k)}: "
                         f"{canonical_json(v, indent, _level + 1)}")
        return "{" + nl + ("," + nl).join(items) + nl + pad + "}"
    if isinstance(obj, (list, tuple)):
        items = [f"{pad_in}{canonical_json(v, indent, _level + 1)}" for v in obj]
        return "[" + nl + ("," + nl).join(items) + nl + pad + "]"
    # numpy scalars and similar duck-typed numbers
    if hasattr(obj, "item"):
        return canonical_json(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj)} canonically")


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file + rename in the same dir."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def sha256_of_text(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_of_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
