"""Image and mask file handling.

Binary PPM (P6) and PGM (P5) are parsed and written directly and round-trip
bit-exactly; 8-bit PNG support rides on Pillow as a convenience.  Images are
8-bit RGB arrays of shape (H, W, 3); masks are boolean (H, W) arrays where
nonzero source pixels mark the hole.
"""

from __future__ import annotations

import struct

import numpy as np


class ImageFormatError(ValueError):
    """Malformed or unsupported image file."""


class UnsupportedDepthError(ImageFormatError):
    """Only 8 bits per sample are supported."""


class MaskError(ValueError):
    """Mask empty or inconsistent with the image."""


def _read_pnm_header(data, magic, path):
    if data[:2] != magic:
        raise ImageFormatError(f"{path}: expected {magic.decode()} header")
    fields = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise ImageFormatError(f"{path}: truncated header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"{path}: non-positive dimensions")
    if maxval != 255:
        raise UnsupportedDepthError(f"{path}: maxval {maxval}, only 8-bit supported")
    return width, height, pos


def read_ppm(path):
    with open(path, "rb") as f:
        data = f.read()
    width, height, pos = _read_pnm_header(data, b"P6", path)
    need = width * height * 3
    raw = data[pos : pos + need]
    if len(raw) < need:
        raise ImageFormatError(f"{path}: truncated pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(path, image):
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ImageFormatError(f"write_ppm needs (H, W, 3) uint8, got {image.shape} {image.dtype}")
    h, w = image.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(np.ascontiguousarray(image).tobytes())


def read_pgm(path):
    with open(path, "rb") as f:
        data = f.read()
    width, height, pos = _read_pnm_header(data, b"P5", path)
    need = width * height
    raw = data[pos : pos + need]
    if len(raw) < need:
        raise ImageFormatError(f"{path}: truncated pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path, image):
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ImageFormatError(f"write_pgm needs (H, W) uint8, got {image.shape} {image.dtype}")
    h, w = image.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(np.ascontiguousarray(image).tobytes())


def _png_bit_depth(path):
    with open(path, "rb") as f:
        head = f.read(26)
    if len(head) < 26 or head[:8] != b"\x89PNG\r\n\x1a\n":
        raise ImageFormatError(f"{path}: not a PNG file")
    _, depth = struct.unpack_from(">IB", head, 16 + 4), head[24]
    return depth


def _read_png(path, mode):
    if _png_bit_depth(path) != 8:
        raise UnsupportedDepthError(f"{path}: only 8-bit PNG is supported")
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert(mode))


def read_image(path):
    """8-bit RGB image from a P6 PPM or an 8-bit PNG."""
    path = str(path)
    if path.lower().endswith(".png"):
        return _read_png(path, "RGB").copy()
    return read_ppm(path)


def write_image(path, image):
    path = str(path)
    if path.lower().endswith(".png"):
        from PIL import Image

        Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path)
    else:
        write_ppm(path, image)


def read_mask(path, image_hw=None):
    """Boolean hole mask from a P5 PGM or grayscale PNG; nonzero = hole."""
    path = str(path)
    if path.lower().endswith(".png"):
        gray = _read_png(path, "L")
    else:
        gray = read_pgm(path)
    mask = gray > 0
    if image_hw is not None and mask.shape != tuple(image_hw):
        raise MaskError(f"mask is {mask.shape}, image is {tuple(image_hw)}")
    if not mask.any():
        raise MaskError(f"{path}: mask marks no hole pixels")
    return mask
