"""Hadamard modulation patterns for single-pixel imaging.

Patterns are binary (0/1) because a reflective modulator cannot realise the
negative Hadamard entries; every base pattern is therefore paired with its
complement. Patterns are stored interleaved: index ``2k`` is base pattern
``k`` (natural Walsh-Hadamard order) and ``2k + 1`` is its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.linalg import hadamard

from .pgm import write_pgm

Strategy = Literal["sequency_prefix", "seeded_random"]


class InvalidDimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PatternBasis:
    """Ordered, immutable set of binary patterns with complement pairing.

    Attributes
    ----------
    entries : (N, rows, cols) uint8 array of 0/1 patterns.
    pairing : (N,) int array; ``entries[pairing[k]]`` is the complement of ``entries[k]``.
    order_labels : (N,) sequency rank of the underlying Walsh row (shared by a pair).
    source_ids : (N,) index of each pattern in the full ``2M`` basis it came from.
    """

    rows: int
    cols: int
    entries: np.ndarray
    pairing: np.ndarray
    order_labels: np.ndarray
    source_ids: np.ndarray

    def __post_init__(self):
        for name in ("entries", "pairing", "order_labels", "source_ids"):
            getattr(self, name).setflags(write=False)

    @property
    def M(self) -> int:
        return self.rows * self.cols

    def __len__(self) -> int:
        return self.entries.shape[0]

    @property
    def pair_count(self) -> int:
        return len(self) // 2

    def flat(self) -> np.ndarray:
        """Patterns as an (N, M) float array, convenient for matrix products."""
        return self.entries.reshape(len(self), -1).astype(float)


def sequency(row: np.ndarray) -> int:
    """Number of sign changes along a 1D +-1 sequence."""
    row = np.asarray(row)
    return int(np.count_nonzero(row[1:] != row[:-1]))


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def generate_hadamard(rows: int, cols: int) -> PatternBasis:
    """Build the full ``2M`` binary Hadamard basis for a ``rows x cols`` frame.

    Each row of the natural-order Walsh-Hadamard matrix of order ``M`` is
    reshaped (row-major) to the frame and recoded ``+1 -> 1``, ``-1 -> 0``.
    """
    if rows != cols or not _is_pow2(rows) or rows < 2:
        raise InvalidDimensionError(
            f"frame must be square with a power-of-two side >= 2, got {rows}x{cols}"
        )
    M = rows * cols
    H = hadamard(M, dtype=np.int8)
    base = (H > 0).astype(np.uint8)
    seq = np.count_nonzero(H[:, 1:] != H[:, :-1], axis=1)

    entries = np.empty((2 * M, M), dtype=np.uint8)
    entries[0::2] = base
    entries[1::2] = 1 - base
    idx = np.arange(2 * M)
    pairing = idx ^ 1
    return PatternBasis(
        rows=rows,
        cols=cols,
        entries=entries.reshape(2 * M, rows, cols),
        pairing=pairing,
        order_labels=np.repeat(seq, 2),
        source_ids=idx,
    )


def select_subset(
    basis: PatternBasis,
    pair_count: int,
    strategy: Strategy = "sequency_prefix",
    seed: int = 0,
) -> PatternBasis:
    """Keep ``pair_count`` (pattern, inverse) pairs.

    ``sequency_prefix`` keeps the lowest-sequency pairs (the constant pattern
    has sequency 0 and is always kept); ``seeded_random`` samples pairs
    without replacement using ``seed``. Kept pairs retain their original order,
    so selecting every pair returns the basis unchanged.
    """
    n_pairs = basis.pair_count
    if not 1 <= pair_count <= n_pairs:
        raise ValueError(f"pair_count must be in 1..{n_pairs}, got {pair_count}")
    pair_seq = basis.order_labels[0::2]
    if strategy == "sequency_prefix":
        chosen = np.argsort(pair_seq, kind="stable")[:pair_count]
    elif strategy == "seeded_random":
        chosen = np.random.default_rng(seed).choice(n_pairs, size=pair_count, replace=False)
    else:
        raise ValueError(f"unknown subset strategy {strategy!r}")
    chosen = np.sort(chosen)
    keep = np.stack([2 * chosen, 2 * chosen + 1], axis=1).ravel()
    return PatternBasis(
        rows=basis.rows,
        cols=basis.cols,
        entries=basis.entries[keep].copy(),
        pairing=np.arange(keep.size) ^ 1,
        order_labels=basis.order_labels[keep].copy(),
        source_ids=basis.source_ids[keep].copy(),
    )


def pattern_overlap(pattern: np.ndarray, scene) -> float:
    """Fraction ``(1/M) sum P * chi`` of frame pixels lit by the pattern and on the object."""
    pattern = np.asarray(pattern)
    mask = scene.mask
    if pattern.shape != mask.shape:
        raise ValueError(f"pattern shape {pattern.shape} != scene shape {mask.shape}")
    return float(np.sum(pattern * mask, dtype=np.int64)) / mask.size


def overlaps(basis: PatternBasis, scene) -> np.ndarray:
    """Vectorised :func:`pattern_overlap` over every pattern of ``basis``."""
    mask = scene.mask
    if (basis.rows, basis.cols) != mask.shape:
        raise ValueError(f"basis shape {(basis.rows, basis.cols)} != scene shape {mask.shape}")
    counts = basis.entries.reshape(len(basis), -1).astype(np.int64) @ mask.ravel().astype(np.int64)
    return counts / mask.size


def export_patterns(basis: PatternBasis, out_dir, binary: bool = True) -> list[Path]:
    """Write each pattern as ``pattern_<source id>.pgm`` (0 -> black, 1 -> white)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = len(str(int(basis.source_ids.max(initial=0))))
    paths = []
    for sid, pat in zip(basis.source_ids, basis.entries):
        paths.append(write_pgm(out_dir / f"pattern_{int(sid):0{width}d}.pgm", pat * 255, binary=binary))
    return paths
