"""Binary container for extracted feature matrices.

Layout of a ``.tsb`` blob:

* bytes 0..3: magic ``b"TSB1"``
* bytes 4..7: little-endian uint32, byte length of the JSON header
* JSON header (UTF-8): ``{"meta": {...}, "arrays": [{"name", "dtype",
  "shape", "offset", "nbytes"}, ...]}`` with offsets relative to the
  start of the data section
* data section: raw C-order little-endian array bytes, concatenated in
  header order

The format is self describing and append-only simple on purpose; it is
meant for handing feature matrices to external tooling, not archival.
"""

from __future__ import annotations

import json
import struct

import numpy as np

__all__ = ["write_blob", "read_blob"]

_MAGIC = b"TSB1"


def write_blob(path, arrays, meta=None):
    """Write named arrays plus a JSON-serializable meta dict to ``path``.

    ``arrays`` is a mapping from name to ndarray; insertion order is
    preserved in the file. Arrays are stored C-contiguous little-endian.
    """
    entries = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        dt = arr.dtype.newbyteorder("<")
        arr = arr.astype(dt, copy=False)
        raw = arr.tobytes(order="C")
        entries.append({
            "name": str(name),
            "dtype": dt.str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        })
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps(
        {"meta": dict(meta or {}), "arrays": entries},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for raw in chunks:
            fh.write(raw)


def read_blob(path):
    """Read a blob written by ``write_blob``; returns (arrays, meta)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 8 or buf[:4] != _MAGIC:
        raise ValueError("%s: not a TSB1 blob" % (path,))
    (hlen,) = struct.unpack("<I", buf[4:8])
    if len(buf) < 8 + hlen:
        raise ValueError("%s: truncated header" % (path,))
    header = json.loads(buf[8:8 + hlen].decode("utf-8"))
    data = buf[8 + hlen:]
    arrays = {}
    end = 0
    for entry in header["arrays"]:
        start = entry["offset"]
        stop = start + entry["nbytes"]
        if stop > len(data):
            raise ValueError(
                "%s: truncated data for array %r" % (path, entry["name"])
            )
        arr = np.frombuffer(data[start:stop], dtype=np.dtype(entry["dtype"]))
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
        end = max(end, stop)
    if end != len(data):
        raise ValueError("%s: %d trailing bytes" % (path, len(data) - end))
    return arrays, header.get("meta", {})
