"""Minimal portable graymap (PGM, P2/P5) reader and writer."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class PGMFormatError(ValueError):
    """Raised when a file is not a well-formed P2/P5 graymap."""


def write_pgm(path, image: np.ndarray, maxval: int = 255, binary: bool = True) -> Path:
    """Write a 2D integer array as P5 (``binary=True``) or P2."""
    path = Path(path)
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {img.shape}")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in 1..65535")
    img = np.clip(np.rint(img), 0, maxval).astype(np.int64)
    rows, cols = img.shape
    header = f"{'P5' if binary else 'P2'}\n{cols} {rows}\n{maxval}\n".encode("ascii")
    if binary:
        dtype = ">u1" if maxval < 256 else ">u2"
        body = img.astype(dtype).tobytes()
    else:
        body = "\n".join(" ".join(str(v) for v in row) for row in img).encode("ascii") + b"\n"
    path.write_bytes(header + body)
    return path


def _tokens(data: bytes, count: int, pos: int) -> tuple[list[bytes], int]:
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PGMFormatError("unexpected end of header")
        out.append(data[start:pos])
    return out, pos


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a P2 or P5 file. Returns ``(image, maxval)``."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise PGMFormatError(f"cannot read {path}: {exc}") from exc
    if len(data) < 2 or data[:2] not in (b"P2", b"P5"):
        raise PGMFormatError(f"{path}: not a P2/P5 graymap")
    try:
        (w, h, mv), pos = _tokens(data, 3, 2)
        cols, rows, maxval = int(w), int(h), int(mv)
    except ValueError as exc:
        raise PGMFormatError(f"{path}: bad header") from exc
    if cols <= 0 or rows <= 0 or not 0 < maxval < 65536:
        raise PGMFormatError(f"{path}: bad header values")

    if data[:2] == b"P5":
        pos += 1  # single whitespace after maxval
        dtype = ">u1" if maxval < 256 else ">u2"
        nbytes = rows * cols * np.dtype(dtype).itemsize
        raw = data[pos : pos + nbytes]
        if len(raw) != nbytes:
            raise PGMFormatError(f"{path}: truncated raster")
        img = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    else:
        try:
            toks, _ = _tokens(data, rows * cols, pos)
            img = np.array([int(t) for t in toks], dtype=np.int64)
        except ValueError as exc:
            raise PGMFormatError(f"{path}: bad raster") from exc
    if img.max(initial=0) > maxval:
        raise PGMFormatError(f"{path}: pixel exceeds maxval")
    return img.reshape(rows, cols), maxval
