"""NPSW weight-file writer/reader (trainer side).

Independent implementation of the same container the inpainting engine
consumes: magic "NPSW", u32 LE version 1, u32 tensor count, per tensor a
u16 name length + UTF-8 name + u8 ndim + ndim x u32 dims + float32 values
row-major, and a trailing CRC32 over the tensor records.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

MAGIC = b"NPSW"
VERSION = 1


class FormatError(Exception):
    pass


def write(path, tensors):
    payload = bytearray()
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f4", order="C")
        raw = name.encode("utf-8")
        payload += struct.pack("<H", len(raw)) + raw
        payload += struct.pack("<B", arr.ndim)
        payload += struct.pack(f"<{arr.ndim}I", *arr.shape)
        payload += arr.tobytes()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(tensors)))
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(bytes(payload)) & 0xFFFFFFFF))


def read(path):
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    payload = blob[12:-4]
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise FormatError(f"{path}: checksum mismatch")
    out = {}
    off = 0
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", payload, off)
        off += 2
        name = payload[off : off + nlen].decode("utf-8")
        off += nlen
        (ndim,) = struct.unpack_from("<B", payload, off)
        off += 1
        dims = struct.unpack_from(f"<{ndim}I", payload, off)
        off += 4 * ndim
        n = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        out[name] = np.frombuffer(payload, dtype="<f4", count=n, offset=off).reshape(dims).copy()
        off += 4 * n
    return out
