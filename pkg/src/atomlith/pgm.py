"""Binary PGM (P5) images: pattern input and dose output."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

import numpy as np

from .fields import GridSpec
from .optics import PatternImage, resample_pattern

PathLike = Union[str, Path]


class PGMError(ValueError):
    pass


def _tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """First ``count`` whitespace-separated header tokens (comments skipped) and the data offset."""
    toks, i, n = [], 0, len(buf)
    while len(toks) < count:
        while i < n and buf[i : i + 1].isspace():
            i += 1
        if i < n and buf[i : i + 1] == b"#":
            while i < n and buf[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not buf[j : j + 1].isspace() and buf[j : j + 1] != b"#":
            j += 1
        if j == i:
            raise PGMError("truncated PGM header")
        toks.append(buf[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    if i >= n or not buf[i : i + 1].isspace():
        raise PGMError("malformed PGM header")
    return toks, i + 1


def read_pgm(path: PathLike) -> tuple[np.ndarray, int]:
    """Return (pixels as uint16 array of shape (h, w), maxval)."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise PGMError(f"{path}: not a binary PGM (P5) file")
    toks, off = _tokens(buf, 4)
    try:
        w, h, maxval = (int(t) for t in toks[1:4])
    except ValueError as e:
        raise PGMError(f"{path}: malformed PGM header") from e
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise PGMError(f"{path}: unsupported PGM dimensions or depth")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * dtype.itemsize
    raster = buf[off : off + need]
    if len(raster) < need:
        raise PGMError(f"{path}: raster shorter than header declares")
    return np.frombuffer(raster, dtype=dtype).reshape(h, w).astype(np.uint16), maxval


def write_pgm(path: PathLike, pixels: np.ndarray, maxval: int) -> None:
    pix = np.asarray(pixels)
    if pix.ndim != 2:
        raise PGMError("PGM raster must be 2D")
    if not 0 < maxval < 65536:
        raise PGMError("maxval must lie in 1..65535")
    if pix.min(initial=0) < 0 or pix.max(initial=0) > maxval:
        raise PGMError("pixel values outside 0..maxval")
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(pix.astype(dtype).tobytes())


def pattern_array(path: PathLike) -> np.ndarray:
    """Pixel values mapped to [0, 1] with maxval -> 1.  Row 0 is the image top."""
    pix, maxval = read_pgm(path)
    if not np.any(pix):
        raise PGMError(f"{path}: all-zero pattern")
    return pix.astype(float) / maxval


def load_pattern(path: PathLike, grid: GridSpec, extent: Optional[float] = None) -> PatternImage:
    return resample_pattern(pattern_array(path), grid, extent)


def _sidecar(path: PathLike) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".scale.txt")


def save_dose(array: np.ndarray, path: PathLike, depth: int = 16) -> Path:
    """Write ``array`` as a PGM, min-max scaled to the bit depth.

    A constant array maps to mid-gray, except an all-zero array which maps to
    0.  The scaling constants go to ``<path>.scale.txt``; returns that path.
    """
    if depth not in (8, 16):
        raise PGMError("depth must be 8 or 16")
    a = np.asarray(array, dtype=float)
    if a.ndim != 2 or not np.all(np.isfinite(a)):
        raise PGMError("dose must be a finite 2D array")
    if a.min() < 0:
        raise PGMError("dose must be nonnegative")
    maxval = (1 << depth) - 1
    lo, hi = float(a.min()), float(a.max())
    if hi > lo:
        pix = np.rint((a - lo) / (hi - lo) * maxval)
        rule = "minmax"
    elif hi == 0:
        pix = np.zeros_like(a)
        rule = "zero"
    else:
        pix = np.full_like(a, (maxval + 1) // 2)
        rule = "constant-midgray"
    # row 0 of the image is +y
    write_pgm(path, pix[::-1].astype(np.uint16), maxval)
    side = _sidecar(path)
    side.write_text(
        f"min={lo!r}\nmax={hi!r}\ndepth={depth}\nmaxval={maxval}\nrule={rule}\n"
        "value=min+(pixel/maxval)*(max-min)\nrow0=+y\n"
    )
    return side
