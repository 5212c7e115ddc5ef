"""Brute-force reference implementations used to cross-check the fast kernels.

Everything here sums explicitly over permutations and shares no code with
``kernels`` or ``amplitude``. Only use it for small sizes.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from iforge.fock import CoefficientTensor, Species, permutation_parity

MAX_ORACLE_N = 8


def _check(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_ORACLE_N:
        raise ValueError(f"oracle limited to n <= {MAX_ORACLE_N}")
    return a


def naive_permanent(a) -> complex:
    a = _check(a)
    n = a.shape[0]
    total = 0j
    for sigma in itertools.permutations(range(n)):
        term = 1 + 0j
        for i in range(n):
            term *= a[i, sigma[i]]
        total += term
    return total


def naive_determinant(a) -> complex:
    a = _check(a)
    n = a.shape[0]
    total = 0j
    for sigma in itertools.permutations(range(n)):
        term = complex(permutation_parity(sigma))
        for i in range(n):
            term *= a[i, sigma[i]]
        total += term
    return total


def coefficient_tensor_oracle(
    W, species: Species | str, d: int, N: int, source_rows: Sequence[int] | None = None
) -> CoefficientTensor:
    """``g[j] = sum_sigma sgn(sigma) prod_m W[src_m, d*sigma(m) + j_sigma(m)]`` term by term (1-based rows)."""
    species = Species.parse(species)
    W = np.asarray(W, dtype=complex)
    rows = [d * k for k in range(N)] if source_rows is None else [r - 1 for r in source_rows]
    out = np.zeros((d,) * N, dtype=complex)
    perms = list(itertools.permutations(range(N)))
    signs = [permutation_parity(s) if species is Species.FERMION else 1 for s in perms]
    for j in itertools.product(range(d), repeat=N):
        total = 0j
        for sigma, sign in zip(perms, signs):
            term = complex(sign)
            for m in range(N):
                k = sigma[m]
                term *= W[rows[m], d * k + j[k]]
            total += term
        out[j] = total
    return CoefficientTensor(out)
