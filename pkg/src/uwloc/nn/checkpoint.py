"""Binary checkpoint: every named array, bit for bit, plus optional Adam state.

Layout (little-endian): ``UWNN``, u16 version, u32 array count, then per
array u16 name length, name bytes, u8 dtype tag, u8 rank, rank x u64 dims and
the raw data.  A trailing u8 flag marks Adam state: u64 step followed by the
moment arrays in the same record format (names prefixed ``m:`` and ``v:``).
"""
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError, MissingCheckpoint

MAGIC = b"UWNN"
VERSION = 1
_TAGS = {np.dtype("<f8"): 0, np.dtype("<f4"): 1, np.dtype("<i8"): 2}
_DTYPES = {v: k for k, v in _TAGS.items()}


def _write_arrays(fh, arrays):
    fh.write(struct.pack("<I", len(arrays)))
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        dt = arr.dtype.newbyteorder("<")
        raw = name.encode("utf-8")
        fh.write(struct.pack("<H", len(raw)) + raw)
        fh.write(struct.pack("<BB", _TAGS[dt], arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.astype(dt, copy=False).tobytes())


def _read_arrays(buf, off):
    (count,) = struct.unpack_from("<I", buf, off)
    off += 4
    out = {}
    for _ in range(count):
        (n,) = struct.unpack_from("<H", buf, off)
        off += 2
        name = bytes(buf[off : off + n]).decode("utf-8")
        off += n
        tag, rank = struct.unpack_from("<BB", buf, off)
        off += 2
        if tag not in _DTYPES:
            raise FormatError(f"unknown dtype tag {tag} for {name}")
        dims = struct.unpack_from(f"<{rank}Q", buf, off)
        off += 8 * rank
        dt = _DTYPES[tag]
        size = int(np.prod(dims)) * dt.itemsize
        if off + size > len(buf):
            raise FormatError(f"truncated data for {name}")
        out[name] = np.frombuffer(buf, dt, int(np.prod(dims)), off).reshape(dims).copy()
        off += size
    return out, off


def save_checkpoint(path, store, include_adam=True):
    arrays = dict(store.params)
    arrays.update(store.buffers)
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<H", VERSION))
        _write_arrays(fh, arrays)
        fh.write(struct.pack("<B", int(include_adam)))
        if include_adam:
            fh.write(struct.pack("<Q", store.step))
            moments = {f"m:{k}": v for k, v in store.m.items()}
            moments.update({f"v:{k}": v for k, v in store.v.items()})
            _write_arrays(fh, moments)


def read_checkpoint(path):
    """Returns ``(arrays, adam)`` where ``adam`` is None or ``(step, moments)``."""
    path = Path(path)
    if not path.exists():
        raise MissingCheckpoint(f"checkpoint {path} not found")
    buf = path.read_bytes()
    if buf[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {buf[:4]!r}")
    (version,) = struct.unpack_from("<H", buf, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    arrays, off = _read_arrays(buf, 6)
    (flag,) = struct.unpack_from("<B", buf, off)
    off += 1
    adam = None
    if flag:
        (step,) = struct.unpack_from("<Q", buf, off)
        moments, off = _read_arrays(buf, off + 8)
        adam = (step, moments)
    if off != len(buf):
        raise FormatError(f"{path}: {len(buf) - off} trailing bytes")
    return arrays, adam


def load_into(store, path, prefixes=None, with_adam=True):
    """Copy checkpoint arrays into ``store`` (optionally only matching prefixes)."""
    arrays, adam = read_checkpoint(path)

    def wanted(name):
        return prefixes is None or any(name.startswith(p) for p in prefixes)

    for name, arr in arrays.items():
        if not wanted(name):
            continue
        target = store.params.get(name, store.buffers.get(name))
        if target is None:
            raise FormatError(f"checkpoint array {name} has no slot in the model")
        if target.shape != arr.shape:
            raise FormatError(f"{name}: checkpoint shape {arr.shape} vs model {target.shape}")
        target[...] = arr
    if with_adam and adam is not None and prefixes is None:
        store.step = adam[0]
        for key, arr in adam[1].items():
            kind, name = key.split(":", 1)
            (store.m if kind == "m" else store.v)[name][...] = arr
    store.version += 1
    return arrays
