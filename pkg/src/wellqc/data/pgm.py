"""Binary PGM (P5) reader/writer.

Pixels are normalized to [0, 1] on ingest (value / maxval) and re-quantized
on write, so a read/write cycle at the same maxval is lossless. Samples are
one byte for maxval <= 255 and big-endian two bytes above that.
"""

import numpy as np

from wellqc.errors import FormatError

_WHITESPACE = b" \t\n\r\x0b\x0c"


class _Tokenizer:
    """Whitespace/comment-aware scanner that tracks the byte offset."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_separators(self):
        while self.pos < len(self.data):
            ch = self.data[self.pos : self.pos + 1]
            if ch in (b"#",):
                nl = self.data.find(b"\n", self.pos)
                self.pos = len(self.data) if nl < 0 else nl + 1
            elif ch and ch in _WHITESPACE:
                self.pos += 1
            else:
                break

    def token(self, what: str) -> bytes:
        self.skip_separators()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos : self.pos + 1] not in _WHITESPACE:
            if self.data[self.pos : self.pos + 1] == b"#":
                break
            self.pos += 1
        if self.pos == start:
            raise FormatError(f"expected {what}", offset=start)
        return self.data[start : self.pos]

    def integer(self, what: str) -> int:
        start = self.pos
        tok = self.token(what)
        try:
            return int(tok)
        except ValueError:
            raise FormatError(f"expected integer {what}, got {tok!r}", offset=start) from None


def read_pgm(path):
    """Read a binary PGM; returns (pixels, maxval).

    ``pixels`` is a float32 (H, W) array in [0, 1].
    """
    with open(path, "rb") as fh:
        data = fh.read()
    tok = _Tokenizer(data)
    magic = tok.token("magic number")
    if magic != b"P5":
        raise FormatError(f"not a binary PGM (magic {magic!r})", offset=0)
    width = tok.integer("width")
    height = tok.integer("height")
    maxval = tok.integer("maxval")
    if width < 1 or height < 1:
        raise FormatError(f"invalid dimensions {width}x{height}", offset=tok.pos)
    if not 0 < maxval < 65536:
        raise FormatError(f"maxval {maxval} outside (0, 65536)", offset=tok.pos)
    if tok.pos >= len(data) or data[tok.pos : tok.pos + 1] not in _WHITESPACE:
        raise FormatError("missing separator before raster data", offset=tok.pos)
    tok.pos += 1

    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    expected = width * height * dtype.itemsize
    raster = data[tok.pos : tok.pos + expected]
    if len(raster) < expected:
        raise FormatError(
            f"truncated raster: expected {expected} bytes, found {len(raster)}",
            offset=tok.pos + len(raster),
        )
    raw = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return (raw.astype(np.float32) / np.float32(maxval)), maxval


def write_pgm(pixels, path, maxval: int = 255) -> None:
    """Quantize a [0, 1] float image to ``maxval`` levels and write it."""
    pixels = np.asarray(pixels)
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        pixels = pixels[:, :, 0]
    if pixels.ndim != 2:
        raise FormatError(f"expected a 2-D grayscale image, got shape {pixels.shape}")
    if not 0 < maxval < 65536:
        raise FormatError(f"maxval {maxval} outside (0, 65536)")
    height, width = pixels.shape
    levels = np.rint(np.clip(pixels, 0.0, 1.0).astype(np.float64) * maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(levels.astype(dtype).tobytes())
