import numpy as np
import pytest
from scipy import stats

from treesnake.rng import RngStream, derive_stream


def test_same_path_identical_sequences():
    a = derive_stream(1, [0]).generator().integers(0, 1 << 63, size=64)
    b = derive_stream(1, [0]).generator().integers(0, 1 << 63, size=64)
    assert np.array_equal(a, b)


def test_disjoint_paths_differ():
    a = derive_stream(1, [0])
    b = derive_stream(1, [1])
    assert a.u64() != b.u64()


def test_stateless_replay_after_other_draws():
    target = derive_stream(1, [7, 3]).generator().integers(0, 1 << 32, size=16)
    other = derive_stream(1, [0])
    other.generator().random(size=10**6)  # heavy use of an unrelated stream
    again = derive_stream(1, [7, 3]).generator().integers(0, 1 << 32, size=16)
    assert np.array_equal(target, again)


def test_derive_extends_path():
    s = derive_stream(9, [2])
    child = s.derive(5, 1)
    assert child.path == (2, 5, 1)
    assert child.master_seed == 9
    assert child.key128() != s.key128()


def test_negative_path_rejected():
    with pytest.raises(ValueError):
        derive_stream(1, [-1])


def test_kernel_key_distinct_from_generator_key():
    s = derive_stream(3, [1])
    assert s.kernel_key() != (s.key128() & ((1 << 64) - 1))


def test_independence_smoke():
    # byte-level uniformity of each stream and no cross-correlation between
    # two sibling streams at lag zero
    n = 1 << 16
    a = derive_stream(42, [0]).generator().integers(0, 256, size=n)
    b = derive_stream(42, [1]).generator().integers(0, 256, size=n)
    for x in (a, b):
        counts = np.bincount(x, minlength=256)
        chi = stats.chisquare(counts).pvalue
        assert chi > 1e-4
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 5 / np.sqrt(n)


def test_master_seed_wraps_to_uint64():
    assert RngStream(-1).master_seed == (1 << 64) - 1
