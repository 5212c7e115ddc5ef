import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iforge import kernels, oracle
from iforge.errors import DimensionError, SizeLimitError


def ginibre(rng, n):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)


def test_permanent_small_cases():
    assert kernels.permanent(np.eye(3)) == pytest.approx(1)
    assert kernels.permanent(np.ones((3, 3))) == pytest.approx(6)
    assert kernels.permanent(np.zeros((0, 0))) == 1
    assert kernels.permanent([[1, 2], [3, 4]]) == pytest.approx(10)


def test_permanent_rejects_bad_input():
    with pytest.raises(DimensionError):
        kernels.permanent(np.ones((2, 3)))
    with pytest.raises(SizeLimitError):
        kernels.permanent(np.ones((25, 25)))


def test_determinant_small_cases():
    assert kernels.determinant(np.eye(4)) == pytest.approx(1)
    assert kernels.determinant([[1, 2], [3, 4]]) == pytest.approx(-2)
    with pytest.raises(DimensionError):
        kernels.determinant(np.ones((2, 3)))


@pytest.mark.parametrize("n", range(1, 9))
def test_permanent_against_oracle_and_glynn(n):
    rng = np.random.default_rng(n)
    a = ginibre(rng, n)
    ref = oracle.naive_permanent(a)
    assert abs(kernels.permanent(a) - ref) < 1e-10 * max(1, abs(ref))
    assert abs(kernels.permanent_glynn(a) - ref) < 1e-10 * max(1, abs(ref))


@pytest.mark.parametrize("n", range(1, 7))
def test_determinant_against_oracle(n):
    a = ginibre(np.random.default_rng(100 + n), n)
    ref = oracle.naive_determinant(a)
    assert abs(kernels.determinant(a) - ref) < 1e-10 * max(1, abs(ref))


@pytest.mark.parametrize("dtype", [np.complex128, np.clongdouble])
def test_batches_match_scalar_kernels(dtype):
    rng = np.random.default_rng(7)
    stack = np.stack([ginibre(rng, 5) for _ in range(6)])
    perms = kernels.permanent_batch(stack, dtype=dtype)
    dets = kernels.determinant_batch(stack, dtype=dtype)
    for a, p, d in zip(stack, perms, dets):
        assert abs(complex(p) - kernels.permanent(a)) < 1e-12
        assert abs(complex(d) - kernels.determinant(a)) < 1e-12


def test_batch_empty_matrices():
    assert kernels.permanent_batch(np.zeros((3, 0, 0))).tolist() == [1, 1, 1]
    assert kernels.determinant_batch(np.zeros((2, 0, 0))).tolist() == [1, 1]


@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.data())
@settings(max_examples=40)
def test_permutation_symmetries(seed, n, data):
    a = ginibre(np.random.default_rng(seed), n)
    rows = data.draw(st.permutations(range(n)))
    cols = data.draw(st.permutations(range(n)))
    p = kernels.permanent(a)
    assert abs(kernels.permanent(a[list(rows)][:, list(cols)]) - p) < 1e-10 * max(1, abs(p))
    swapped = a.copy()
    swapped[[0, 1]] = swapped[[1, 0]]
    assert abs(kernels.determinant(swapped) + kernels.determinant(a)) < 1e-10


def test_ryser_20x20_under_one_second():
    a = ginibre(np.random.default_rng(20), 20)
    kernels.permanent(a[:2, :2])  # compile outside the timed region
    t0 = time.perf_counter()
    kernels.permanent(a)
    assert time.perf_counter() - t0 <= 1.0
