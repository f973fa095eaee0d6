"""Binary grayscale PGM (P5) reading and writing."""
from pathlib import Path

import numpy as np

from .errors import MapFileNotFoundError, MapFormatError


def _tokens(data, count, start):
    """Pull ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    out = []
    i = start
    n = len(data)
    while len(out) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i >= n:
            raise MapFormatError("truncated PGM header")
        if data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        out.append(data[i:j])
        i = j
    return out, i


def read_pgm(path):
    """Return the image as a ``(height, width)`` uint8 array (row 0 is the top row)."""
    path = Path(path)
    if not path.is_file():
        raise MapFileNotFoundError(f"map file not found: {path}")
    data = path.read_bytes()
    if data[:2] != b"P5":
        raise MapFormatError(f"{path}: bad magic {data[:2]!r}, expected b'P5'")
    toks, i = _tokens(data, 3, 2)
    try:
        width, height, maxval = (int(t) for t in toks)
    except ValueError:
        raise MapFormatError(f"{path}: non-integer header field in {toks!r}") from None
    if width <= 0 or height <= 0:
        raise MapFormatError(f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise MapFormatError(f"{path}: maxval {maxval} unsupported (one byte per pixel only)")
    # exactly one whitespace byte separates header from raster
    i += 1
    raster = data[i : i + width * height]
    if len(raster) != width * height:
        raise MapFormatError(f"{path}: expected {width * height} pixel bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path, image):
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 2:
        raise ValueError("image must be 2-D")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(image).tobytes())
