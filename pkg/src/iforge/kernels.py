"""Permanent and determinant kernels.

``permanent`` is Ryser's inclusion-exclusion formula walked in Gray-code order,
so every step adds or removes a single column from the running row sums
(``O(2**n * n)`` work). ``permanent_glynn`` is an independent formula kept as a
cross-check. The ``*_batch`` variants evaluate stacks of small matrices at once.
"""

from __future__ import annotations

import numba
import numpy as np

from iforge.errors import DimensionError, SizeLimitError

MAX_PERMANENT_SIZE = 24


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


@numba.njit(cache=True)
def _ryser_gray(a):
    n = a.shape[0]
    rowsum = np.zeros(n, dtype=np.complex128)
    total = 0j
    for k in range(1, 1 << n):
        j = 0
        t = k
        while (t & 1) == 0:
            t >>= 1
            j += 1
        gray = k ^ (k >> 1)
        if gray & (1 << j):
            for i in range(n):
                rowsum[i] += a[i, j]
        else:
            for i in range(n):
                rowsum[i] -= a[i, j]
        prod = 1.0 + 0j
        for i in range(n):
            prod *= rowsum[i]
        # subset size parity flips with every Gray step
        if k & 1:
            total -= prod
        else:
            total += prod
    if n & 1:
        return -total
    return total


def permanent(a) -> complex:
    """Permanent of a square complex matrix (Ryser, Gray-code order)."""
    a = _square(a)
    n = a.shape[0]
    if n > MAX_PERMANENT_SIZE:
        raise SizeLimitError(f"permanent limited to n <= {MAX_PERMANENT_SIZE}, got {n}")
    if n == 0:
        return 1.0 + 0j
    return complex(_ryser_gray(np.ascontiguousarray(a)))


def permanent_glynn(a) -> complex:
    """Permanent via Glynn's formula; independent of the Ryser path."""
    a = _square(a)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n > 16:
        raise SizeLimitError(f"Glynn cross-check limited to n <= 16, got {n}")
    bits = (np.arange(1 << (n - 1))[:, None] >> np.arange(n - 1)) & 1
    delta = np.ones((bits.shape[0], n))
    delta[:, 1:] = 1 - 2 * bits
    sums = delta @ a
    terms = np.prod(delta, axis=1) * np.prod(sums, axis=1)
    return complex(terms.sum() / 2 ** (n - 1))


def determinant(a) -> complex:
    """Determinant via LAPACK's partially pivoted LU factorization."""
    a = _square(a)
    if a.shape[0] == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(a))


def permanent_batch(stack, dtype=np.complex128) -> np.ndarray:
    """Permanents of a stack of ``k x k`` matrices, shape ``(..., k, k)``.

    ``dtype=np.clongdouble`` runs the accumulation in extended precision.
    """
    stack = np.asarray(stack)
    if stack.ndim < 2 or stack.shape[-1] != stack.shape[-2]:
        raise DimensionError(f"expected a stack of square matrices, got shape {stack.shape}")
    k = stack.shape[-1]
    if k > 12:
        raise SizeLimitError(f"batched permanent limited to k <= 12, got {k}")
    lead = stack.shape[:-2]
    if k == 0:
        return np.ones(lead, dtype=dtype)
    a = stack.reshape((-1, k, k)).astype(dtype)
    rowsum = np.zeros((a.shape[0], k), dtype=dtype)
    total = np.zeros(a.shape[0], dtype=dtype)
    for step in range(1, 1 << k):
        j = (step & -step).bit_length() - 1
        if (step ^ (step >> 1)) & (1 << j):
            rowsum += a[:, :, j]
        else:
            rowsum -= a[:, :, j]
        prod = np.prod(rowsum, axis=1)
        if step & 1:
            total -= prod
        else:
            total += prod
    if k & 1:
        total = -total
    return total.reshape(lead)


def determinant_batch(stack, dtype=np.complex128) -> np.ndarray:
    """Determinants of a stack of square matrices.

    Double precision goes straight to LAPACK; other dtypes use a pivoted
    Gaussian elimination carried out in that dtype.
    """
    stack = np.asarray(stack)
    if stack.ndim < 2 or stack.shape[-1] != stack.shape[-2]:
        raise DimensionError(f"expected a stack of square matrices, got shape {stack.shape}")
    k = stack.shape[-1]
    lead = stack.shape[:-2]
    if k == 0:
        return np.ones(lead, dtype=dtype)
    if np.dtype(dtype) == np.complex128:
        return np.linalg.det(stack.astype(np.complex128))
    a = stack.reshape((-1, k, k)).astype(dtype).copy()
    rows = np.arange(a.shape[0])
    det = np.ones(a.shape[0], dtype=dtype)
    for col in range(k):
        piv = col + np.argmax(np.abs(a[:, col:, col]), axis=1)
        swap = piv != col
        det[swap] = -det[swap]
        top = a[rows, col].copy()
        a[rows, col] = a[rows, piv]
        a[rows, piv] = top
        pivot = a[:, col, col]
        det *= pivot
        safe = np.where(pivot == 0, 1, pivot)
        factors = a[:, col + 1 :, col] / safe[:, None]
        a[:, col + 1 :, :] -= factors[:, :, None] * a[:, col, None, :]
    return det.reshape(lead)
