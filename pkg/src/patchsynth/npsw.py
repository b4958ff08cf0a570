"""Reading and writing of NPSW weight files.

NPSW is the little binary container this project uses to move frozen network
weights between tools.  Layout (all integers little-endian):

    magic   4 bytes  b"NPSW"
    version u32      currently 1
    count   u32      number of tensors
    payload          `count` records back to back:
        name_len u16, name utf-8, ndim u8, ndim x u32 dims,
        prod(dims) float32 values, row-major
    crc32   u32      zlib crc32 of the payload bytes

Reserved name families: ``vgg19.<layer>.weight|bias``, ``vgg19.mean`` and
``contentnet.<layer>.weight|bias``.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

MAGIC = b"NPSW"
VERSION = 1


class NpswError(Exception):
    """Base class for weight-file problems."""


class BadMagicError(NpswError):
    pass


class VersionMismatchError(NpswError):
    pass


class TruncatedFileError(NpswError):
    pass


class ChecksumError(NpswError):
    pass


class DimMismatchError(NpswError):
    """Loaded tensor dims disagree with what a network graph declares."""


def write_weights(path, tensors):
    """Write a name -> array mapping; values are stored as float32."""
    payload = bytearray()
    items = list(tensors.items())
    for name, arr in items:
        arr = np.asarray(arr, dtype=np.float32, order="C")
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise NpswError(f"tensor name too long: {name!r}")
        if arr.ndim > 0xFF:
            raise NpswError(f"too many dims for {name!r}")
        payload += struct.pack("<H", len(raw)) + raw
        payload += struct.pack("<B", arr.ndim)
        payload += struct.pack(f"<{arr.ndim}I", *arr.shape)
        payload += arr.tobytes()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(items)))
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(bytes(payload)) & 0xFFFFFFFF))


def load_weights(path):
    """Load a weight table; verifies magic, version, dims and checksum."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12:
        raise TruncatedFileError(f"{path}: too short to hold a header")
    if data[:4] != MAGIC:
        raise BadMagicError(f"{path}: not an NPSW file")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    if len(data) < 16:
        raise TruncatedFileError(f"{path}: missing checksum")
    payload = data[12:-4]
    (stored_crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError(f"{path}: payload checksum mismatch")

    table = {}
    off = 0
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", payload, off)
            off += 2
            name = payload[off : off + name_len].decode("utf-8")
            if len(payload) < off + name_len:
                raise struct.error("short name")
            off += name_len
            (ndim,) = struct.unpack_from("<B", payload, off)
            off += 1
            dims = struct.unpack_from(f"<{ndim}I", payload, off)
            off += 4 * ndim
            n_values = int(np.prod(dims, dtype=np.int64)) if ndim else 1
            end = off + 4 * n_values
            if end > len(payload):
                raise struct.error("short tensor data")
            arr = np.frombuffer(payload, dtype="<f4", count=n_values, offset=off)
            off = end
        except struct.error as exc:
            raise TruncatedFileError(f"{path}: truncated tensor record ({exc})") from exc
        table[name] = arr.reshape(dims).astype(np.float32)
    if off != len(payload):
        raise TruncatedFileError(f"{path}: {len(payload) - off} trailing payload bytes")
    return table
