import numpy as np
import pytest

from spisim.patterns import (InvalidDimensionError, export_patterns, generate_hadamard,
                             overlaps, pattern_overlap, select_subset, sequency)
from spisim.pgm import read_pgm
from spisim.scene import TargetScene, builtin_scene


def walsh_oracle(M):
    """Natural-order Walsh-Hadamard matrix from the bitwise-parity definition."""
    k = np.arange(M)
    parity = np.array([[bin(a & b).count("1") & 1 for b in k] for a in k])
    return 1 - 2 * parity


def test_full_32x32_basis_has_2048_patterns():
    assert len(generate_hadamard(32, 32)) == 2048


def test_2x2_structure():
    b = generate_hadamard(2, 2)
    assert len(b) == 8
    assert (b.entries[0] == 1).all()
    assert (b.entries[b.pairing[0]] == 0).all()


def test_4x4_nonconstant_patterns_have_half_ones():
    H = walsh_oracle(16)
    oracle_ones = ((H[1:] > 0).sum(axis=1))
    assert (oracle_ones == 8).all()
    b = generate_hadamard(4, 4)
    base = b.entries[0::2].reshape(16, -1)
    assert (base.sum(axis=1)[1:] == oracle_ones).all()
    np.testing.assert_array_equal(base, (H > 0).astype(np.uint8))


@pytest.mark.parametrize("side", [3, 6, 0])
def test_rejects_non_power_of_two(side):
    with pytest.raises(InvalidDimensionError):
        generate_hadamard(side, side)


def test_rejects_non_square():
    with pytest.raises(InvalidDimensionError):
        generate_hadamard(4, 8)


@pytest.mark.parametrize("side", [2, 4, 8])
def test_invariants_exhaustive(side):
    b = generate_hadamard(side, side)
    M = side * side
    P = b.entries.reshape(len(b), -1).astype(np.int64)
    # pairing is complete and complementary
    assert (b.pairing[b.pairing] == np.arange(len(b))).all()
    assert (P + P[b.pairing] == 1).all()
    # half ones except the all-ones pattern (and its all-zeros inverse)
    ones = P.sum(axis=1)
    assert ones[0] == M and ones[1] == 0
    assert (ones[2:] == M // 2).all()
    # distinct +-1 recoded base patterns are orthogonal
    S = 2 * P[0::2] - 1
    G = S @ S.T
    np.testing.assert_array_equal(G, M * np.eye(M, dtype=np.int64))
    # sequency labels are a permutation of 0..M-1 shared within a pair
    assert sorted(b.order_labels[0::2]) == list(range(M))
    assert (b.order_labels[0::2] == b.order_labels[1::2]).all()


def test_sequency_counts_sign_changes():
    assert sequency(np.array([1, 1, -1, -1, 1])) == 2
    assert sequency(np.ones(8)) == 0


def test_deterministic():
    a, b = generate_hadamard(8, 8), generate_hadamard(8, 8)
    assert a.entries.tobytes() == b.entries.tobytes()
    assert (a.order_labels == b.order_labels).all()


def test_immutable():
    b = generate_hadamard(4, 4)
    with pytest.raises(ValueError):
        b.entries[0, 0, 0] = 0


def test_subset_350_pairs():
    s = select_subset(generate_hadamard(32, 32), 350, "sequency_prefix")
    assert len(s) == 700
    assert (s.entries[0] == 1).all()
    assert (s.pairing[s.pairing] == np.arange(700)).all()


@pytest.mark.parametrize("strategy", ["sequency_prefix", "seeded_random"])
def test_full_subset_is_identity(strategy):
    b = generate_hadamard(4, 4)
    s = select_subset(b, 16, strategy, seed=3)
    assert s.entries.tobytes() == b.entries.tobytes()
    assert (s.source_ids == b.source_ids).all()


def test_single_pair_is_constant_pair():
    s = select_subset(generate_hadamard(4, 4), 1, "sequency_prefix")
    assert len(s) == 2
    assert (s.entries[0] == 1).all() and (s.entries[1] == 0).all()


def test_prefix_keeps_lowest_sequencies():
    b = generate_hadamard(8, 8)
    s = select_subset(b, 10)
    assert sorted(set(s.order_labels)) == list(range(10))


def test_random_subset_seeded():
    b = generate_hadamard(8, 8)
    s1 = select_subset(b, 7, "seeded_random", seed=11)
    s2 = select_subset(b, 7, "seeded_random", seed=11)
    s3 = select_subset(b, 7, "seeded_random", seed=12)
    assert (s1.source_ids == s2.source_ids).all()
    assert not (s1.source_ids == s3.source_ids).all()
    assert (s1.entries + s1.entries[s1.pairing] == 1).all()


@pytest.mark.parametrize("count", [0, 17])
def test_subset_out_of_range(count):
    with pytest.raises(ValueError):
        select_subset(generate_hadamard(4, 4), count)


def test_overlap_trivial_cases():
    full = TargetScene(np.ones((4, 4), dtype=np.uint8))
    empty = TargetScene(np.zeros((4, 4), dtype=np.uint8))
    b = generate_hadamard(4, 4)
    assert pattern_overlap(b.entries[0], full) == 1.0
    assert all(pattern_overlap(p, empty) == 0.0 for p in b.entries)


def test_overlap_checkerboard_left_half():
    checker = (np.indices((4, 4)).sum(axis=0) % 2 == 0).astype(np.uint8)
    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[:, :2] = 1
    # direct count: each of the 4 rows has one lit pixel in the left half
    lit = sum(int(checker[i, j] and mask[i, j]) for i in range(4) for j in range(4))
    assert lit == 4
    assert pattern_overlap(checker, TargetScene(mask)) == lit / 16 == 0.25


def test_overlap_dimension_mismatch():
    with pytest.raises(ValueError):
        pattern_overlap(np.ones((2, 2)), TargetScene(np.ones((4, 4), dtype=np.uint8)))


def test_pair_overlaps_sum_to_full(rng):
    b = generate_hadamard(8, 8)
    scene = TargetScene((rng.random((8, 8)) < 0.4).astype(np.uint8))
    chi = overlaps(b, scene)
    full = pattern_overlap(np.ones((8, 8)), scene)
    assert (chi + chi[b.pairing] == full).all()
    assert chi[5] == pattern_overlap(b.entries[5], scene)


def test_export_patterns(tmp_path):
    b = select_subset(generate_hadamard(4, 4), 2)
    paths = export_patterns(b, tmp_path, binary=False)
    assert len(paths) == 4
    img, maxval = read_pgm(paths[1])
    assert maxval == 255 and (img == 0).all()
    assert tmp_path.joinpath("pattern_00.pgm").read_bytes().startswith(b"P2")


def test_builtin_scene_overlap_fraction():
    s = builtin_scene("letter_A", 16, 16)
    b = generate_hadamard(16, 16)
    assert overlaps(b, s)[0] == s.mask.mean()
