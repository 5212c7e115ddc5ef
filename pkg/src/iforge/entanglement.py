"""Schmidt-rank bounds for generated states.

The generalized Schmidt rank itself is not computed. A report brackets it
between the largest bipartite matricization rank (a lower bound) and the
combinatorial path-counting bound (an upper bound).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from iforge.errors import DimensionError, SizeLimitError, UndefinedRankError
from iforge.fock import CoefficientTensor, ModeOccupation, Species

DEFAULT_RANK_TOL = 1e-8


def combinatorial_bound(N: int, input_occupation: ModeOccupation | Sequence[int] | None = None, input_rank: int = 1) -> int:
    """``input_rank * N! / prod(r_j!)``; distinct many-particle paths times input rank."""
    if input_rank < 1:
        raise ValueError(f"input rank must be at least 1, got {input_rank}")
    if input_occupation is None:
        counts: Sequence[int] = (1,) * N
    elif isinstance(input_occupation, ModeOccupation):
        counts = input_occupation.counts
    else:
        counts = tuple(input_occupation)
    if sum(counts) != N:
        raise DimensionError(f"occupation {tuple(counts)} does not hold N={N} particles")
    return input_rank * math.factorial(N) // math.prod(math.factorial(c) for c in counts)


def _check_partition(N: int, partition: Sequence[int]) -> tuple[int, ...]:
    part = tuple(sorted(set(int(p) for p in partition)))
    if not part or len(part) >= N or part[0] < 1 or part[-1] > N:
        raise DimensionError(f"partition {tuple(partition)} is not a nonempty proper subset of 1..{N}")
    return part


def matricize(g: CoefficientTensor, partition: Sequence[int]) -> np.ndarray:
    """Reshape ``g`` into a matrix with the parties in ``partition`` as rows."""
    part = _check_partition(g.N, partition)
    rows = [p - 1 for p in part]
    cols = [k for k in range(g.N) if k + 1 not in part]
    arr = np.transpose(g.amplitudes, rows + cols)
    return arr.reshape(g.d ** len(rows), -1)


def bipartite_spectrum(g: CoefficientTensor, partition: Sequence[int]) -> np.ndarray:
    return np.linalg.svd(matricize(g, partition), compute_uv=False)


def _rank_from_spectrum(s: np.ndarray, tolerance: float) -> int:
    if s.size == 0 or s[0] == 0:
        raise UndefinedRankError("rank of the zero tensor is undefined")
    return int(np.count_nonzero(s > tolerance * s[0]))


def bipartite_rank(g: CoefficientTensor, partition: Sequence[int], tolerance: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values of the matricization above ``tolerance * sigma_max``."""
    return _rank_from_spectrum(bipartite_spectrum(g, partition), tolerance)


def bipartitions(N: int) -> list[tuple[int, ...]]:
    """Subsets containing party 1, one per unordered bipartition, in lexicographic order."""
    out = []
    for size in range(1, N):
        for rest in itertools.combinations(range(2, N + 1), size - 1):
            out.append((1,) + rest)
    out.sort()
    return out


def max_bipartite_rank(
    g: CoefficientTensor, tolerance: float = DEFAULT_RANK_TOL
) -> tuple[int, tuple[int, ...]]:
    """Largest bipartite rank over all cuts, with the lexicographically first achieving subset."""
    best, where, _ = _scan_bipartitions(g, tolerance)
    return best, where


def _scan_bipartitions(g, tolerance):
    N = g.N
    if N > 12:
        raise SizeLimitError(f"bipartition enumeration limited to N <= 12, got {N}")
    if N == 1:
        if g.norm_squared() == 0:
            raise UndefinedRankError("rank of the zero tensor is undefined")
        return 1, (), {}
    best, where = -1, ()
    spectra = {}
    for part in bipartitions(N):
        s = bipartite_spectrum(g, part)
        spectra[part] = s
        r = _rank_from_spectrum(s, tolerance)
        if r > best:
            best, where = r, part
    return best, where, spectra


@dataclass
class RankReport:
    combinatorial_upper: int
    bipartite_lower: int
    bipartition_achieving_lower: tuple[int, ...]
    input_rank_factor: int = 1
    tolerance: float = DEFAULT_RANK_TOL
    spectra: dict = field(default_factory=dict)

    def spectral_gap(self) -> float | None:
        """Ratio of the last kept to the first dropped singular value on the achieving cut."""
        s = self.spectra.get(self.bipartition_achieving_lower)
        if s is None or self.bipartite_lower >= len(s):
            return None
        dropped = s[self.bipartite_lower]
        return math.inf if dropped == 0 else float(s[self.bipartite_lower - 1] / dropped)

    def to_json(self) -> dict:
        gap = self.spectral_gap()
        return {
            "combinatorial_upper": self.combinatorial_upper,
            "bipartite_lower": self.bipartite_lower,
            "bipartition_achieving_lower": list(self.bipartition_achieving_lower),
            "input_rank_factor": self.input_rank_factor,
            "tolerance": self.tolerance,
            "spectral_gap": None if gap is None or math.isinf(gap) else gap,
            "spectra": [
                {"partition": list(part), "singular_values": [float(x) for x in s]}
                for part, s in self.spectra.items()
            ],
        }


def rank_report(
    g: CoefficientTensor,
    input_occupation: ModeOccupation | Sequence[int] | None = None,
    input_rank: int = 1,
    tolerance: float = DEFAULT_RANK_TOL,
) -> RankReport:
    best, where, spectra = _scan_bipartitions(g, tolerance)
    return RankReport(
        combinatorial_upper=combinatorial_bound(g.N, input_occupation, input_rank),
        bipartite_lower=best,
        bipartition_achieving_lower=where,
        input_rank_factor=input_rank,
        tolerance=tolerance,
        spectra=spectra,
    )


def permutation_representation(
    V, internal_states: Sequence[Sequence[complex]], species: Species | str
) -> tuple[dict[tuple[int, ...], complex], CoefficientTensor]:
    """Path coefficients of a non-polarizing setup and the state they build.

    ``coeffs[sigma] = sgn(sigma) * prod_j V[sigma(j), j]`` with ``sigma`` given
    as a 1-based tuple; the tensor is ``sum_sigma coeffs[sigma] * (x)_k eps_{sigma(k)}``.
    """
    species = Species.parse(species)
    V = np.asarray(V, dtype=complex)
    N = V.shape[0]
    if V.shape != (N, N) or len(internal_states) != N:
        raise DimensionError("V must be N x N with one internal state per particle")
    if N > 8:
        raise SizeLimitError(f"permutation sum limited to N <= 8, got {N}")
    eps = [np.asarray(e, dtype=complex) for e in internal_states]
    d = len(eps[0])
    coeffs: dict[tuple[int, ...], complex] = {}
    state = np.zeros((d,) * N, dtype=complex)
    for sigma in itertools.permutations(range(N)):
        amp = species.sign(sigma) * np.prod([V[sigma[j], j] for j in range(N)])
        coeffs[tuple(s + 1 for s in sigma)] = complex(amp)
        if amp == 0:
            continue
        term = np.ones((), dtype=complex)
        for k in range(N):
            term = np.multiply.outer(term, eps[sigma[k]])
        state += amp * term
    return coeffs, CoefficientTensor(state)
