"""Binary tensor files ("TQT1") and multi-tensor checkpoint containers.

Single-record layout, all little-endian:

    offset 0   magic        b"TQT1"
           4   u8           format version, currently 1
           5   u8           dtype code: 0 f32, 1 u8, 2 u16, 3 u32
           6   u8           scheme code: 0 raw, 1 uniform, 2 truncquant
           7   u8           bit width (0 for raw)
           8   u32          ndim
          12   u64[ndim]    dims
           +   u8           norm mode: 0 none, 1 dorefa-tanh, 2 minmax
           +   f32          delta_prime
           +   f32[2]       aux
           +   payload      row-major elements

Checkpoint container: u16 record count, then per record a u16 name length,
the utf-8 name bytes, a u64 record length, and one single-record blob.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError
from .quantize import TRUNCQUANT, UNIFORM, QuantizedTensor, bin_dtype
from .tensors import DOREFA_TANH, MINMAX, NormalizationParams

MAGIC = b"TQT1"
VERSION = 1

_DTYPE_BY_CODE = {0: np.dtype("<f4"), 1: np.dtype("u1"), 2: np.dtype("<u2"), 3: np.dtype("<u4")}
_CODE_BY_KIND = {np.dtype(np.float32): 0, np.dtype(np.uint8): 1, np.dtype(np.uint16): 2, np.dtype(np.uint32): 3}
_SCHEME_BY_CODE = {1: UNIFORM, 2: TRUNCQUANT}
_CODE_BY_SCHEME = {UNIFORM: 1, TRUNCQUANT: 2}
_NORM_BY_CODE = {1: DOREFA_TANH, 2: MINMAX}
_CODE_BY_NORM = {DOREFA_TANH: 1, MINMAX: 2}

_SCHEME_RAW = 0
_NORM_NONE = 0


class _Cursor:
    """Byte reader that reports the absolute offset of any underrun."""

    def __init__(self, buf: bytes, offset: int = 0):
        self.buf = buf
        self.pos = offset

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > len(self.buf):
            raise FormatError(f"truncated file: expected {count} bytes for {what}", self.pos)
        out = self.buf[self.pos : self.pos + count]
        self.pos += count
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def tensor_to_bytes(obj) -> bytes:
    """Serialize a raw float array or a :class:`QuantizedTensor`."""
    if isinstance(obj, QuantizedTensor):
        payload = np.ascontiguousarray(obj.bins.astype(bin_dtype(obj.bits)))
        dtype_code = _CODE_BY_KIND[payload.dtype]
        scheme_code = _CODE_BY_SCHEME[obj.scheme]
        bits = obj.bits
        norm = obj.norm
    else:
        payload = np.ascontiguousarray(np.asarray(obj, dtype=np.float32))
        dtype_code = 0
        scheme_code = _SCHEME_RAW
        bits = 0
        norm = None

    if norm is None:
        norm_code, delta_prime, aux = _NORM_NONE, 1.0, (0.0, 0.0)
    else:
        norm_code, delta_prime, aux = _CODE_BY_NORM[norm.mode], norm.delta_prime, norm.aux

    head = bytearray()
    head += MAGIC
    head += struct.pack("<BBBB", VERSION, dtype_code, scheme_code, bits)
    head += struct.pack("<I", payload.ndim)
    head += struct.pack(f"<{payload.ndim}Q", *payload.shape)
    head += struct.pack("<Bfff", norm_code, delta_prime, aux[0], aux[1])
    return bytes(head) + payload.astype(payload.dtype.newbyteorder("<")).tobytes()


def tensor_from_bytes(buf: bytes, offset: int = 0):
    """Parse one record; returns ``(tensor, end_offset)``.

    Raises :class:`FormatError` with the absolute byte offset on any
    malformed field.
    """
    cur = _Cursor(buf, offset)
    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset)
    (version,) = cur.unpack("<B", "version")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}", cur.pos - 1)
    (dtype_code,) = cur.unpack("<B", "dtype code")
    if dtype_code not in _DTYPE_BY_CODE:
        raise FormatError(f"unknown dtype code {dtype_code}", cur.pos - 1)
    (scheme_code,) = cur.unpack("<B", "scheme code")
    if scheme_code != _SCHEME_RAW and scheme_code not in _SCHEME_BY_CODE:
        raise FormatError(f"unknown scheme code {scheme_code}", cur.pos - 1)
    (bits,) = cur.unpack("<B", "bit width")
    (ndim,) = cur.unpack("<I", "ndim")
    dims = cur.unpack(f"<{ndim}Q", "dims")
    norm_code, delta_prime, aux0, aux1 = cur.unpack("<Bfff", "normalization block")
    if norm_code != _NORM_NONE and norm_code not in _NORM_BY_CODE:
        raise FormatError(f"unknown normalization mode {norm_code}", cur.pos - 13)

    dtype = _DTYPE_BY_CODE[dtype_code]
    count = 1
    for d in dims:
        count *= d
    payload_offset = cur.pos
    raw = cur.take(count * dtype.itemsize, "payload")
    data = np.frombuffer(raw, dtype=dtype).reshape(dims)

    norm = None
    if norm_code != _NORM_NONE:
        norm = NormalizationParams(_NORM_BY_CODE[norm_code], delta_prime, (aux0, aux1))

    if scheme_code == _SCHEME_RAW:
        if bits != 0:
            raise FormatError(f"raw tensor with nonzero bit width {bits}", offset + 7)
        if dtype_code != 0:
            raise FormatError("raw tensor payload must be f32", offset + 5)
        return np.array(data, dtype=np.float32), cur.pos

    if not 1 <= bits <= 16:
        raise FormatError(f"bit width {bits} out of range [1, 16]", offset + 7)
    if count and int(data.max()) > (1 << bits) - 1:
        raise FormatError(
            f"payload contains bins above the {bits}-bit maximum", payload_offset
        )
    q = QuantizedTensor(np.array(data), _SCHEME_BY_CODE[scheme_code], bits, norm)
    return q, cur.pos


def _atomic_write(path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_tensor(path, obj):
    """Write one tensor record atomically (temp file + rename)."""
    _atomic_write(path, tensor_to_bytes(obj))


def read_tensor(path):
    """Read one tensor record; the file must contain exactly one."""
    data = Path(path).read_bytes()
    obj, end = tensor_from_bytes(data)
    if end != len(data):
        raise FormatError(f"{len(data) - end} trailing bytes after record", end)
    return obj


def checkpoint_to_bytes(records: dict) -> bytes:
    if len(records) > 0xFFFF:
        raise DomainError(f"too many records for a checkpoint: {len(records)}")
    out = bytearray(struct.pack("<H", len(records)))
    for name, obj in records.items():
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise DomainError(f"record name too long: {name!r}")
        blob = tensor_to_bytes(obj)
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += struct.pack("<Q", len(blob))
        out += blob
    return bytes(out)


def checkpoint_from_bytes(buf: bytes) -> dict:
    cur = _Cursor(buf)
    (count,) = cur.unpack("<H", "record count")
    records = {}
    for _ in range(count):
        (name_len,) = cur.unpack("<H", "name length")
        name = cur.take(name_len, "record name").decode("utf-8")
        (blob_len,) = cur.unpack("<Q", "record length")
        start = cur.pos
        cur.take(blob_len, f"record {name!r}")
        obj, end = tensor_from_bytes(buf, start)
        if end != start + blob_len:
            raise FormatError(
                f"record {name!r} length mismatch: header says {blob_len}, "
                f"parsed {end - start}",
                start,
            )
        if name in records:
            raise FormatError(f"duplicate record name {name!r}", start)
        records[name] = obj
    if cur.pos != len(buf):
        raise FormatError(f"{len(buf) - cur.pos} trailing bytes after container", cur.pos)
    return records


def write_checkpoint(path, records: dict):
    """Write a named multi-tensor container atomically."""
    _atomic_write(path, checkpoint_to_bytes(records))


def read_checkpoint(path) -> dict:
    return checkpoint_from_bytes(Path(path).read_bytes())


def read_any(path):
    """Read either a single tensor record or a checkpoint container.

    Single records are recognized by their magic; anything else is parsed
    as a container.
    """
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        obj, end = tensor_from_bytes(data)
        if end != len(data):
            raise FormatError(f"{len(data) - end} trailing bytes after record", end)
        return obj
    try:
        return checkpoint_from_bytes(data)
    except FormatError as exc:
        raise FormatError(
            f"bad magic {data[:4]!r} for a tensor record, and not a valid checkpoint",
            0,
        ) from exc
