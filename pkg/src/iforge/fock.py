"""Index algebra between N-qudit coefficient tensors and mode-occupation Fock states.

Conventions used throughout the package:

* Physical modes and qudit values are 1-based in every public interface.
* Mode ``d*(k-1) + l`` carries a particle of party ``k`` in internal state ``l``.
* A :class:`CoefficientTensor` stores its ``d**N`` amplitudes in an array of shape
  ``(d,)*N``; flattening is row-major so ``j_1`` is the most significant index.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from iforge.errors import DimensionError, NotInterpretableError, ProjectionMissingError

#: Fock amplitudes below this magnitude count as absent.
ZERO_AMPLITUDE = 1e-14


class Species(enum.Enum):
    BOSON = "boson"
    FERMION = "fermion"

    def sign(self, perm: Sequence[int]) -> int:
        """Exchange sign of a permutation: always +1 for bosons, the parity for fermions."""
        if self is Species.BOSON:
            return 1
        return permutation_parity(perm)

    @classmethod
    def parse(cls, value: "Species | str") -> "Species":
        if isinstance(value, Species):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown species {value!r}; expected 'boson' or 'fermion'") from None


def permutation_parity(perm: Sequence[int]) -> int:
    """Signature (+1/-1) of a permutation given as a sequence of distinct labels."""
    order = sorted(range(len(perm)), key=lambda i: perm[i])
    seen = [False] * len(order)
    sign = 1
    for start in range(len(order)):
        if seen[start]:
            continue
        length = 0
        i = start
        while not seen[i]:
            seen[i] = True
            i = order[i]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class ModeOccupation:
    """Particle count per physical mode.

    ``d`` is the internal dimension used to group modes into parties; it only
    matters for post-selection.
    """

    counts: tuple[int, ...]
    d: int = 1

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError(f"occupation counts must be nonnegative: {counts}")
        if self.d < 1:
            raise ValueError(f"internal dimension must be positive, got {self.d}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def N(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class CoefficientTensor:
    """Amplitudes ``c[j_1, ..., j_N]`` of an N-qudit state (possibly unnormalized)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim == 0:
            raise DimensionError("a coefficient tensor needs at least one party")
        if len(set(amps.shape)) != 1:
            raise DimensionError(f"all parties must share one dimension, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("coefficient tensor has non-finite entries")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def d(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def N(self) -> int:
        return self.amplitudes.ndim

    @classmethod
    def zeros(cls, d: int, N: int) -> "CoefficientTensor":
        return cls(np.zeros((d,) * N, dtype=complex))

    @classmethod
    def from_flat(cls, d: int, N: int, values: Iterable[complex]) -> "CoefficientTensor":
        flat = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=complex)
        if flat.size != d**N:
            raise DimensionError(f"expected {d**N} amplitudes for d={d}, N={N}, got {flat.size}")
        return cls(flat.reshape((d,) * N))

    @classmethod
    def basis(cls, d: int, indices: Sequence[int]) -> "CoefficientTensor":
        """Product basis state ``|j_1, ..., j_N>`` from 1-based indices."""
        out = np.zeros((d,) * len(indices), dtype=complex)
        out[tuple(j - 1 for j in indices)] = 1.0
        return cls(out)

    @classmethod
    def product(cls, vectors: Sequence[Sequence[complex]]) -> "CoefficientTensor":
        """Tensor product of single-party state vectors."""
        out = np.ones((), dtype=complex)
        for v in vectors:
            out = np.multiply.outer(out, np.asarray(v, dtype=complex))
        return cls(out)

    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def entry(self, *indices: int) -> complex:
        """Amplitude at 1-based indices."""
        return complex(self.amplitudes[tuple(j - 1 for j in indices)])

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.norm_squared() - 1.0) <= tol

    def normalized(self) -> "CoefficientTensor":
        norm = math.sqrt(self.norm_squared())
        if norm == 0.0:
            raise ValueError("cannot normalize the zero tensor")
        return CoefficientTensor(self.amplitudes / norm)

    def nonzero(self, tol: float = ZERO_AMPLITUDE) -> Iterator[tuple[tuple[int, ...], complex]]:
        """Yield ``(1-based indices, amplitude)`` for entries above ``tol`` in row-major order."""
        for idx in zip(*np.nonzero(np.abs(self.amplitudes) > tol)):
            yield tuple(int(i) + 1 for i in idx), complex(self.amplitudes[idx])


@dataclass(frozen=True)
class FockTerm:
    occupation: tuple[int, ...]
    amplitude: complex


@dataclass(frozen=True)
class FockSuperposition:
    """Superposition of Fock states with amplitudes relative to normalized Fock vectors.

    A bosonic term ``(a_1^dag)^2 |vac>`` therefore appears with amplitude
    ``sqrt(2)`` on the occupation ``(2, 0, ...)``.
    """

    n: int
    N: int
    amplitudes: Mapping[tuple[int, ...], complex] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[tuple[int, ...], complex] = {}
        for occ, amp in self.amplitudes.items():
            occ = tuple(int(c) for c in occ)
            if len(occ) != self.n:
                raise DimensionError(f"occupation {occ} has {len(occ)} modes, expected {self.n}")
            if sum(occ) != self.N or any(c < 0 for c in occ):
                raise DimensionError(f"occupation {occ} does not hold {self.N} particles")
            clean[occ] = clean.get(occ, 0j) + complex(amp)
        object.__setattr__(self, "amplitudes", clean)

    @classmethod
    def from_terms(cls, n: int, N: int, terms: Iterable[FockTerm | tuple]) -> "FockSuperposition":
        amps: dict[tuple[int, ...], complex] = {}
        for term in terms:
            occ, amp = (term.occupation, term.amplitude) if isinstance(term, FockTerm) else term
            occ = tuple(occ)
            if occ in amps:
                raise ValueError(f"duplicate occupation {occ}")
            amps[occ] = complex(amp)
        return cls(n, N, amps)

    @property
    def terms(self) -> list[FockTerm]:
        return [FockTerm(occ, amp) for occ, amp in self.amplitudes.items()]

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return self.amplitudes.get(tuple(occupation), 0j)


def occupation_to_assignment(r: ModeOccupation) -> tuple[int, ...]:
    """Sorted 1-based mode list, mode ``j`` repeated ``r_j`` times."""
    return tuple(j + 1 for j, c in enumerate(r.counts) for _ in range(c))


def assignment_to_occupation(modes: Sequence[int], n: int, d: int = 1) -> ModeOccupation:
    counts = [0] * n
    for m in modes:
        if not 1 <= m <= n:
            raise DimensionError(f"mode {m} outside 1..{n}")
        counts[m - 1] += 1
    return ModeOccupation(tuple(counts), d)


def is_post_selected(r: ModeOccupation) -> bool:
    """True iff every group of ``d`` consecutive modes holds exactly one particle."""
    d, n = r.d, r.n
    if n % d != 0:
        raise DimensionError(f"{n} modes cannot be split into groups of d={d}")
    N = n // d
    if r.N != N:
        raise DimensionError(f"occupation holds {r.N} particles but has {N} mode groups")
    return all(sum(r.counts[d * k : d * (k + 1)]) == 1 for k in range(N))


def assignment_to_qudit_index(modes: Sequence[int], d: int) -> tuple[int, ...]:
    """Map a mode assignment list to 1-based qudit indices ``j_k = a_k - d(k-1)``."""
    out = []
    for k, a in enumerate(modes):
        j = a - d * k
        if not 1 <= j <= d:
            raise NotInterpretableError(
                f"assignment {tuple(modes)} has no N-qudit interpretation for d={d}"
            )
        out.append(j)
    return tuple(out)


def qudit_index_to_occupation(indices: Sequence[int], d: int) -> tuple[int, ...]:
    counts = [0] * (d * len(indices))
    for k, j in enumerate(indices):
        counts[d * k + j - 1] = 1
    return tuple(counts)


def omega(tensor: CoefficientTensor) -> FockSuperposition:
    """Embed an N-qudit tensor as a post-selected Fock superposition on ``d*N`` modes."""
    d, N = tensor.d, tensor.N
    amps = {
        qudit_index_to_occupation(idx, d): amp
        for idx, amp in tensor.nonzero(tol=0.0)
    }
    return FockSuperposition(d * N, N, amps)


def omega_inverse(state: FockSuperposition, d: int, N: int) -> CoefficientTensor:
    """Read a post-selected Fock superposition back as an N-qudit coefficient tensor."""
    if state.n != d * N:
        raise DimensionError(f"superposition has {state.n} modes, expected d*N = {d * N}")
    out = np.zeros((d,) * N, dtype=complex)
    for occ, amp in state.amplitudes.items():
        r = ModeOccupation(occ, d)
        if not is_post_selected(r):
            if abs(amp) > ZERO_AMPLITUDE:
                raise ProjectionMissingError(
                    f"term {occ} with amplitude {amp:.3g} is not post-selected"
                )
            continue
        idx = assignment_to_qudit_index(occupation_to_assignment(r), d)
        out[tuple(j - 1 for j in idx)] = amp
    return CoefficientTensor(out)


def occupations(n: int, N: int) -> list[tuple[int, ...]]:
    """All occupations of ``n`` modes by ``N`` particles in ascending lexicographic order."""
    out = []
    for bars in itertools.combinations(range(N + n - 1), n - 1):
        prev = -1
        occ = []
        for b in bars:
            occ.append(b - prev - 1)
            prev = b
        occ.append(N + n - 1 - prev - 1)
        out.append(tuple(occ))
    out.sort()
    return out
