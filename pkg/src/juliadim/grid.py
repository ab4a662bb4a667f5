"""Pixel-grid geometry shared by rendering and component labeling.

Convention: row 0 is the top of the image (largest imaginary part),
pixels are sampled at their centers, and a point maps to the pixel whose
cell contains it.  All downstream masks agree on this so pixel-set
containment tests between levels are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ValueError("box must have positive area")

    @classmethod
    def square(cls, half_width: float, center: complex = 0j) -> "Box":
        return cls(
            center.real - half_width,
            center.real + half_width,
            center.imag - half_width,
            center.imag + half_width,
        )

    @classmethod
    def axis_aligned(cls, half_width: float, height: int) -> "Box":
        """Square window shifted half a pitch so a center row hits Im z = 0.

        With a power-of-two height and a dyadic half width the row lands
        on the real axis exactly, which is what resolves real invariant
        intervals that are thinner than a pixel.
        """
        py = 2.0 * half_width / height
        return cls(
            -half_width, half_width,
            -half_width + py / 2.0, half_width + py / 2.0,
        )

    def pitches(self, width: int, height: int):
        return (
            (self.re_max - self.re_min) / width,
            (self.im_max - self.im_min) / height,
        )

    def centers(self, width: int, height: int) -> np.ndarray:
        """Complex mesh of pixel centers, shape (height, width), row 0 on top."""
        px, py = self.pitches(width, height)
        xs = self.re_min + (np.arange(width) + 0.5) * px
        ys = self.im_max - (np.arange(height) + 0.5) * py
        return xs[None, :] + 1j * ys[:, None]

    def locate(self, pts: np.ndarray, width: int, height: int):
        """Map complex points to (rows, cols, inside-mask)."""
        pts = np.asarray(pts, dtype=np.complex128)
        px, py = self.pitches(width, height)
        cols = np.floor((pts.real - self.re_min) / px).astype(np.int64)
        rows = np.floor((self.im_max - pts.imag) / py).astype(np.int64)
        inside = (cols >= 0) & (cols < width) & (rows >= 0) & (rows < height)
        return rows, cols, inside


def write_pgm(values: np.ndarray, path, comments=()) -> None:
    """Serialize a (H, W) uint8 array as binary PGM (P5, maxval 255)."""
    arr = np.ascontiguousarray(values, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError("PGM payload must be 2-d")
    h, w = arr.shape
    header = bytearray(b"P5\n")
    for line in comments:
        header += b"# " + str(line).encode("ascii", "replace") + b"\n"
    header += f"{w} {h}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(bytes(header))
        fh.write(arr.tobytes())


def read_pgm(path):
    """Parse a binary PGM written by write_pgm; returns (array, comments)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a P5 PGM")
    comments = []
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comments.append(data[pos + 1 : end].decode("ascii").strip())
            pos = end + 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        tokens.append(int(data[pos:end]))
        pos = end
    pos += 1  # single whitespace after maxval
    w, h, maxval = tokens
    if maxval != 255:
        raise ValueError("expected maxval 255")
    arr = np.frombuffer(data[pos : pos + w * h], dtype=np.uint8).reshape(h, w)
    return arr.copy(), comments
