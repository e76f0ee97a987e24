"""8-bit grayscale PGM (P2 ASCII / P5 binary) reading and writing.

Pixels are mapped to [0, 1] by ``v / 255`` on read; on write values are
clamped to [0, 1] and rounded from ``v * 255``.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import PgmParseError
from .signal import Signal

__all__ = ["read_pgm", "write_pgm", "quantize", "parse_pgm"]

_WHITESPACE = b" \t\r\n\v\f"


class _HeaderReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_space(self):
        data = self.data
        while self.pos < len(data):
            c = data[self.pos : self.pos + 1]
            if c == b"#":
                end = data.find(b"\n", self.pos)
                self.pos = len(data) if end < 0 else end + 1
            elif c in _WHITESPACE:
                self.pos += 1
            else:
                break

    def token(self, what: str) -> bytes:
        self.skip_space()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos : self.pos + 1] not in _WHITESPACE + b"#":
            self.pos += 1
        if start == self.pos:
            raise PgmParseError(f"missing {what}", start)
        return self.data[start : self.pos]

    def integer(self, what: str) -> int:
        start = self.pos
        tok = self.token(what)
        if not tok.isdigit():
            raise PgmParseError(f"invalid {what} {tok!r}", start)
        return int(tok)


def parse_pgm(data: bytes) -> np.ndarray:
    """Parse PGM bytes into a ``height x width`` uint8 array."""
    hr = _HeaderReader(data)
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmParseError(f"bad magic {magic!r}", 0)
    hr.pos = 2
    width = hr.integer("width")
    height = hr.integer("height")
    maxval_pos = hr.pos
    maxval = hr.integer("maxval")
    if maxval != 255:
        raise PgmParseError(f"unsupported maxval {maxval}, expected 255", maxval_pos)
    if width < 1 or height < 1:
        raise PgmParseError("empty image", maxval_pos)
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        start = hr.pos + 1
        raster = data[start : start + count]
        if len(raster) < count:
            raise PgmParseError(f"truncated raster: {len(raster)} of {count} bytes", start + len(raster))
        pixels = np.frombuffer(raster, dtype=np.uint8)
    else:
        pixels = np.empty(count, dtype=np.uint8)
        for i in range(count):
            hr.skip_space()
            if hr.pos >= len(data):
                raise PgmParseError(f"truncated raster: {i} of {count} values", hr.pos)
            start = hr.pos
            v = hr.integer("pixel value")
            if v > 255:
                raise PgmParseError(f"pixel value {v} exceeds maxval", start)
            pixels[i] = v
    return pixels.reshape(height, width).copy()


def read_pgm(path) -> Signal:
    with open(path, "rb") as fh:
        data = fh.read()
    return Signal.from_image(parse_pgm(data) / 255.0)


def quantize(values) -> np.ndarray:
    """Clamp to [0, 1] and round to 8-bit levels."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.round(v * 255.0).astype(np.uint8)


def write_pgm(signal, path, binary: bool = True):
    """Write a signal (or 2D array) as PGM; ``binary=False`` writes P2."""
    if isinstance(signal, Signal):
        image = signal.image()
    else:
        image = np.asarray(signal, dtype=np.float64)
        if image.ndim != 2:
            raise ValueError("write_pgm needs a 2D image or a Signal")
    pixels = quantize(image)
    height, width = pixels.shape
    if binary:
        payload = f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()
    else:
        rows = "\n".join(" ".join(str(int(v)) for v in row) for row in pixels)
        payload = f"P2\n{width} {height}\n255\n{rows}\n".encode("ascii")
    with open(os.fspath(path), "wb") as fh:
        fh.write(payload)
