"""Principal-minor structure of fermionic coefficient tensors.

Writing every column of ``W'`` in the basis of ``N`` pivot columns ``P`` turns
each fermionic coefficient into ``det(P)`` times a determinant of expansion
coefficients. For qubits with the default pivots this second factor is a
principal minor of one ``N x N`` matrix ``C``, so the whole tensor is fixed by
``det(P)`` and the principal minors of ``C``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from iforge.amplitude import qudit_columns
from iforge.errors import DimensionError, SizeLimitError
from iforge.fock import CoefficientTensor

COND_LIMIT = 1e12
MAX_MINOR_N = 12


@dataclass
class MinorDecomposition:
    """``D = det(P)`` and expansion coefficients of ``W'`` in the pivot basis.

    ``full`` is ``P^-1 W'`` (``N x dN``). ``C`` keeps only the non-pivot
    columns, transposed so row ``r`` holds the pivot coefficients of the
    ``r``-th non-pivot column: ``(d-1)N x N``, which is ``N x N`` for qubits.
    ``pivot_columns`` are 1-based. A rank-deficient ``W'`` gives ``D = 0``
    and no coefficients.
    """

    D: complex
    C: np.ndarray | None
    pivot_columns: tuple[int, ...]
    d: int
    N: int
    full: np.ndarray | None = None
    rank_deficient: bool = False
    condition: float = float("inf")

    @property
    def default_pivots(self) -> bool:
        return self.pivot_columns == tuple(self.d * k + 1 for k in range(self.N))


def _cond(P: np.ndarray) -> float:
    s = np.linalg.svd(P, compute_uv=False)
    return float("inf") if s[-1] == 0 else float(s[0] / s[-1])


def decompose(W_prime, d: int) -> MinorDecomposition:
    """Split ``W'`` into a pivot determinant and expansion coefficients.

    The pivots default to the first internal state of every party. If that
    choice is ill-conditioned, column-pivoted QR picks ``N`` columns instead.
    """
    Wp = np.asarray(W_prime, dtype=complex)
    if Wp.ndim != 2 or Wp.shape[1] != d * Wp.shape[0]:
        raise DimensionError(f"W' must be N x dN with d={d}, got shape {Wp.shape}")
    N = Wp.shape[0]
    if np.linalg.matrix_rank(Wp) < N:
        return MinorDecomposition(0j, None, (), d, N, rank_deficient=True)
    pivots = [d * k for k in range(N)]
    cond = _cond(Wp[:, pivots])
    if cond > COND_LIMIT:
        _, _, perm = scipy.linalg.qr(Wp, pivoting=True, mode="economic")
        pivots = sorted(int(p) for p in perm[:N])
        cond = _cond(Wp[:, pivots])
        if cond > COND_LIMIT:
            return MinorDecomposition(0j, None, (), d, N, rank_deficient=True, condition=cond)
    P = Wp[:, pivots]
    full = np.linalg.solve(P, Wp)
    others = [c for c in range(d * N) if c not in pivots]
    return MinorDecomposition(
        D=complex(np.linalg.det(P)),
        C=full[:, others].T.copy(),
        pivot_columns=tuple(p + 1 for p in pivots),
        d=d,
        N=N,
        full=full,
        condition=cond,
    )


def subsets(N: int) -> list[tuple[int, ...]]:
    """All subsets of ``1..N`` in bitmask order: bit ``k-1`` of the position selects ``k``."""
    return [tuple(k + 1 for k in range(N) if m >> k & 1) for m in range(1 << N)]


def principal_minors(C) -> list[complex]:
    """Determinants of all ``2**N`` principal submatrices in bitmask order; the empty one is 1."""
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {C.shape}")
    N = C.shape[0]
    if N > MAX_MINOR_N:
        raise SizeLimitError(f"principal minors limited to N <= {MAX_MINOR_N}, got {N}")
    out = []
    for sub in subsets(N):
        idx = np.array(sub, dtype=int) - 1
        out.append(1.0 + 0j if not sub else complex(np.linalg.det(C[np.ix_(idx, idx)])))
    return out


def reconstruct(dec: MinorDecomposition) -> CoefficientTensor:
    """Fermionic tensor ``D * det(P^-1 W'[:, cols(j)])`` for every index ``j``.

    For qubits with default pivots this is ``D * det(C[S, S])`` with
    ``S = {k : j_k = 2}``, evaluated through the principal minors.
    """
    d, N = dec.d, dec.N
    if dec.rank_deficient:
        return CoefficientTensor.zeros(d, N)
    if d == 2 and dec.default_pivots:
        minors = principal_minors(dec.C)
        flat = []
        for idx in itertools.product((0, 1), repeat=N):
            mask = sum(1 << k for k in range(N) if idx[k])
            flat.append(dec.D * minors[mask])
        return CoefficientTensor.from_flat(d, N, flat)
    cols = qudit_columns(d, N)
    stack = np.transpose(dec.full[:, cols], (1, 0, 2))
    return CoefficientTensor((dec.D * np.linalg.det(stack)).reshape((d,) * N))


def _minor_jacobian(C: np.ndarray, chosen: list[tuple[int, ...]]) -> np.ndarray:
    """Derivatives of ``det(C[S, S])`` for each ``S`` in ``chosen`` w.r.t. the ``N*N`` entries of ``C``."""
    N = C.shape[0]
    J = np.zeros((len(chosen), N * N), dtype=complex)
    for r, sub in enumerate(chosen):
        idx = [s - 1 for s in sub]
        for pa, a in enumerate(idx):
            for pb, b in enumerate(idx):
                rest_r = [x for x in idx if x != a]
                rest_c = [x for x in idx if x != b]
                minor = np.linalg.det(C[np.ix_(rest_r, rest_c)]) if rest_r else 1.0
                J[r, a * N + b] = (-1) ** (pa + pb) * minor
    return J


def _rank(J: np.ndarray, tol: float) -> int:
    s = np.linalg.svd(J, compute_uv=False)
    return int(np.count_nonzero(s > tol * s[0])) if s.size and s[0] > 0 else 0


def spanning_subsets(N: int) -> list[tuple[int, ...]]:
    """All singletons, all pairs, and the triples that contain index 1."""
    out = [(k,) for k in range(1, N + 1)]
    out += list(itertools.combinations(range(1, N + 1), 2))
    out += [(1,) + rest for rest in itertools.combinations(range(2, N + 1), 2)]
    return out


def spanning_minors(C) -> list[tuple[tuple[int, ...], complex]]:
    """The distinguished minors, ``N + N(N-1)/2 + (N-1)(N-2)/2`` of them, as ``(subset, value)`` pairs."""
    C = np.asarray(C, dtype=complex)
    N = C.shape[0]
    if N > MAX_MINOR_N:
        raise SizeLimitError(f"principal minors limited to N <= {MAX_MINOR_N}, got {N}")
    out = []
    for sub in spanning_subsets(N):
        idx = np.array(sub) - 1
        out.append((sub, complex(np.linalg.det(C[np.ix_(idx, idx)]))))
    return out


def _check_rank_args(N: int, trials: int):
    if not 1 <= N <= 6:
        raise SizeLimitError(f"minor-map rank limited to 1 <= N <= 6, got {N}")
    if trials < 1:
        raise ValueError("at least one trial is required")


def minor_map_rank(N: int, trials: int = 3, seed: int = 0, tol: float = 1e-8) -> int:
    """Largest Jacobian rank of ``C -> (nonempty principal minors)`` over random Ginibre ``C``."""
    _check_rank_args(N, trials)
    rng = np.random.default_rng(seed)
    chosen = subsets(N)[1:]
    best = 0
    for _ in range(trials):
        C = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
        best = max(best, _rank(_minor_jacobian(C, chosen), tol))
    return best


def spanning_minor_rank(N: int, trials: int = 3, seed: int = 0, tol: float = 1e-8) -> int:
    """As :func:`minor_map_rank`, restricted to the spanning minors."""
    _check_rank_args(N, trials)
    rng = np.random.default_rng(seed)
    chosen = spanning_subsets(N)
    best = 0
    for _ in range(trials):
        C = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
        best = max(best, _rank(_minor_jacobian(C, chosen), tol))
    return best
