"""Scattering matrices: setup classes, compilation, unitary dilation and a device library."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from iforge.errors import DimensionError, InvalidLocalError, UnknownDeviceError, UnphysicalMatrixError
from iforge.fock import ModeOccupation, occupation_to_assignment

UNITARITY_TOL = 1e-9

NONPOLARIZING = "nonpolarizing"
POLARIZING = "polarizing"
GENERAL = "general"
KINDS = (NONPOLARIZING, POLARIZING, GENERAL)


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def unitarity_defect(a) -> float:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return math.inf
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))))


def is_subunitary(w, tol: float = UNITARITY_TOL) -> bool:
    """True if every singular value of ``w`` is at most ``1 + tol``."""
    w = as_matrix(w)
    if w.size == 0:
        return True
    return bool(np.linalg.svd(w, compute_uv=False).max() <= 1.0 + tol)


def block_diag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    blocks = [as_matrix(b) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for b in blocks:
        out[r : r + b.shape[0], c : c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_subunitary(n: int, rng: np.random.Generator, m: int | None = None) -> np.ndarray:
    """Random ``n x m`` matrix with singular values drawn uniformly from [0, 1]."""
    m = n if m is None else m
    u = random_unitary(n, rng)
    v = random_unitary(m, rng)
    k = min(n, m)
    s = np.zeros((n, m))
    s[np.arange(k), np.arange(k)] = rng.uniform(0.0, 1.0, size=k)
    return u @ s @ v


def unitary_with_first_row(v: Sequence[complex]) -> np.ndarray:
    """A unitary whose first row is the normalized vector ``v``."""
    v = np.asarray(v, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("zero vector has no direction")
    basis = np.eye(len(v), dtype=complex)
    basis[:, 0] = v.conj() / norm
    q, r = np.linalg.qr(basis)
    # QR may flip the phase of the first column
    q[:, 0] *= r[0, 0] / abs(r[0, 0])
    return q.conj().T


@dataclass(frozen=True, eq=False)
class SetupSpec:
    """Declarative scattering network.

    ``matrices`` holds one ``V`` (non-polarizing), ``d`` matrices ``V^(k)``
    (polarizing) or the full ``W`` (general). Row counts are in units of
    spatial source modes: ``N`` of them, or ``len(input_occupation)`` when
    particles share source modes.
    """

    kind: str
    d: int
    N: int
    matrices: tuple[np.ndarray, ...]
    input_locals: tuple[np.ndarray, ...] | None = None
    output_locals: tuple[np.ndarray, ...] | None = None
    input_occupation: tuple[int, ...] | None = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown setup kind {self.kind!r}")
        if self.d < 1 or self.N < 1:
            raise DimensionError(f"d and N must be positive, got d={self.d}, N={self.N}")
        object.__setattr__(self, "matrices", tuple(as_matrix(m) for m in self.matrices))
        for name in ("input_locals", "output_locals"):
            locs = getattr(self, name)
            if locs is not None:
                object.__setattr__(self, name, tuple(as_matrix(m) for m in locs))
        if self.input_occupation is not None:
            object.__setattr__(self, "input_occupation", tuple(int(c) for c in self.input_occupation))

    @classmethod
    def non_polarizing(cls, V, d: int, **kwargs) -> "SetupSpec":
        V = as_matrix(V)
        return cls(NONPOLARIZING, d, V.shape[1], (V,), **kwargs)

    @classmethod
    def polarizing(cls, Vs: Sequence, **kwargs) -> "SetupSpec":
        Vs = [as_matrix(V) for V in Vs]
        return cls(POLARIZING, len(Vs), Vs[0].shape[1], tuple(Vs), **kwargs)

    @classmethod
    def general(cls, W, d: int, N: int, **kwargs) -> "SetupSpec":
        return cls(GENERAL, d, N, (as_matrix(W),), **kwargs)


def _check_locals(locs, d: int, N: int, what: str) -> list[np.ndarray]:
    if len(locs) != N:
        raise DimensionError(f"{what}: expected {N} local operators, got {len(locs)}")
    for k, L in enumerate(locs):
        if L.shape != (d, d):
            raise DimensionError(f"{what}[{k}]: expected shape ({d}, {d}), got {L.shape}")
        defect = unitarity_defect(L)
        if defect > UNITARITY_TOL:
            raise InvalidLocalError(f"{what}[{k}] deviates from unitarity by {defect:.3g}")
    return list(locs)


def _base_matrix(spec: SetupSpec) -> np.ndarray:
    d = spec.d
    if spec.kind == NONPOLARIZING:
        if len(spec.matrices) != 1:
            raise DimensionError("a non-polarizing setup takes exactly one matrix V")
        (V,) = spec.matrices
        if V.shape[1] != spec.N:
            raise DimensionError(f"V must have N={spec.N} columns, got {V.shape[1]}")
        return np.kron(V, np.eye(d))
    if spec.kind == POLARIZING:
        if len(spec.matrices) != d:
            raise DimensionError(f"a polarizing setup takes d={d} matrices, got {len(spec.matrices)}")
        shape = spec.matrices[0].shape
        if any(V.shape != shape for V in spec.matrices) or shape[1] != spec.N:
            raise DimensionError("polarizing matrices must share one shape with N columns")
        W = np.zeros((shape[0] * d, shape[1] * d), dtype=complex)
        for k, V in enumerate(spec.matrices):
            proj = np.zeros((d, d))
            proj[k, k] = 1.0
            W += np.kron(V, proj)
        return W
    if len(spec.matrices) != 1:
        raise DimensionError("a general setup takes exactly one matrix W")
    (W,) = spec.matrices
    if W.shape[0] % d != 0:
        raise DimensionError(f"W has {W.shape[0]} rows, not a multiple of d={d}")
    if W.shape[1] < d * spec.N:
        raise DimensionError(f"W needs at least d*N = {d * spec.N} columns, got {W.shape[1]}")
    return W


def compile_setup(spec: SetupSpec) -> np.ndarray:
    """Single-particle scattering matrix ``W`` with ``d*N`` rows described by ``spec``.

    Source row groups are replicated according to ``input_occupation``; if the
    base matrix has fewer than ``N`` source groups and no occupation is given,
    the missing groups are zero rows (unused input modes).
    """
    d, N = spec.d, spec.N
    base = _base_matrix(spec)
    groups = base.shape[0] // d
    if spec.input_occupation is not None:
        occ = ModeOccupation(spec.input_occupation)
        if occ.n != groups:
            raise DimensionError(
                f"input_occupation covers {occ.n} source modes, matrix has {groups}"
            )
        if occ.N != N:
            raise DimensionError(f"input_occupation holds {occ.N} particles, expected N={N}")
        rows = [base[d * (a - 1) : d * a] for a in occupation_to_assignment(occ)]
        W = np.vstack(rows)
    elif groups == N:
        W = base.copy()
    elif groups < N:
        W = np.vstack([base, np.zeros((d * (N - groups), base.shape[1]), dtype=complex)])
    else:
        raise DimensionError(f"matrix has {groups} source groups but only N={N} particles")

    if spec.input_locals is not None:
        W = block_diag(_check_locals(spec.input_locals, d, N, "input_locals")) @ W
    if spec.output_locals is not None:
        if W.shape[1] != d * N:
            raise DimensionError("output_locals need a matrix with exactly d*N columns")
        W = W @ block_diag(_check_locals(spec.output_locals, d, N, "output_locals"))
    return W


compile = compile_setup


def embed_unitary(W, tolerance: float = UNITARITY_TOL) -> np.ndarray:
    """Unitary dilation ``U = [[W, X], [Y, Z]]`` of a square sub-unitary matrix.

    Built from the SVD ``W = P S Q^dag``: one auxiliary mode per singular value
    below one, padded with identity up to ``2n - 1``. When all ``n`` singular
    values are below one the result is ``2n x 2n``; no smaller unitary can
    contain ``W`` in that case.
    """
    W = as_matrix(W)
    n = W.shape[0]
    if W.shape != (n, n):
        raise DimensionError(f"embed_unitary expects a square matrix, got {W.shape}")
    P, s, Qh = np.linalg.svd(W)
    if s.size and s.max() > 1.0 + tolerance:
        raise UnphysicalMatrixError(f"singular value {s.max():.6g} exceeds 1")
    s = np.minimum(s, 1.0)
    defect = np.sqrt(1.0 - s**2)
    lossy = np.flatnonzero(defect > 1e-7)
    s = np.where(defect > 1e-7, s, 1.0)
    k = len(lossy)
    size = max(2 * n - 1, n + k) if n > 0 else 0
    U = np.eye(size, dtype=complex)
    U[:n, :n] = (P * s) @ Qh
    aux = np.arange(n, n + k)
    U[:n, aux] = P[:, lossy] * defect[lossy]
    U[np.ix_(aux, range(n))] = -(defect[lossy, None] * Qh[lossy, :])
    U[np.ix_(aux, aux)] = np.diag(s[lossy])
    return U


def reverse(W) -> np.ndarray:
    """Scattering matrix of the time-reversed process (input and output exchanged)."""
    return as_matrix(W).conj().T


# --- device library -------------------------------------------------------

_BS = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def fourier_matrix(N: int) -> np.ndarray:
    """Unitary Fourier multiport ``exp(2 pi i (j-1)(k-1)/N) / sqrt(N)``."""
    j = np.arange(N)
    return np.exp(2j * np.pi * np.outer(j, j) / N) / math.sqrt(N)


def ghz_analyzer_block() -> np.ndarray:
    """6x3 map from (1H, 1V, 3H, 3V, 5H, 5V) to detectors D1, D3, D5."""
    return (
        np.array(
            [[0, 0, 1], [1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 1, 0], [0, 0, 1]],
            dtype=complex,
        )
        / math.sqrt(2)
    )


def four_photon_matrix(gamma: float) -> np.ndarray:
    """4x8 matrix from (1H, 1V, 2H, 2V) to four output modes with polarization rotation ``gamma``."""
    s, c = math.sin(2 * gamma), math.cos(2 * gamma)
    return (
        np.array(
            [
                [1j * s, 0, 1j * s, 0, c, 0, c, 0],
                [1j * c, 0, 1j * c, 0, -s, 0, -s, 0],
                [0, -1, 0, -1, 0, 0, 0, 0],
                [0, 0, 0, 0, 0, 1j, 0, 1j],
            ],
            dtype=complex,
        )
        / math.sqrt(2)
    )


def _int_param(params, i, name, default=None) -> int:
    if len(params) > i:
        value = params[i]
    elif default is not None:
        value = default
    else:
        raise ValueError(f"missing parameter {name}")
    if float(value) != int(value) or int(value) < 1:
        raise ValueError(f"{name} must be a positive integer, got {value}")
    return int(value)


def _fourier(params):
    N = _int_param(params, 0, "N")
    d = _int_param(params, 1, "d", 2)
    return SetupSpec.non_polarizing(fourier_matrix(N), d, label=f"fourier({N},{d})")


def _freespace(params):
    N = _int_param(params, 0, "N")
    d = _int_param(params, 1, "d", 2)
    if len(params) < 3:
        raise ValueError("freespace needs a detection probability p")
    p = float(params[2])
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    V = np.full((N, N), math.sqrt(p), dtype=complex)
    return SetupSpec.non_polarizing(V, d, label=f"freespace({N},{d},{p})")


def _ghz_analyzer(params):
    W = np.zeros((6, 6), dtype=complex)
    W[:, 0::2] = ghz_analyzer_block()
    return SetupSpec.general(W, 2, 3, label="ghz_analyzer")


def _four_photon_family(params):
    if len(params) < 1:
        raise ValueError("four_photon_family needs the rotation angle gamma")
    gamma = float(params[0])
    return SetupSpec.general(four_photon_matrix(gamma), 2, 4, label=f"four_photon_family({gamma})")


def _beamsplitter(params):
    d = _int_param(params, 0, "d", 2)
    return SetupSpec.non_polarizing(_BS, d, label=f"beamsplitter({d})")


def _pbs(params):
    swap = np.array([[0, 1], [1, 0]], dtype=complex)
    return SetupSpec.polarizing([_BS, swap], label="pbs")


DEVICES = {
    "fourier": _fourier,
    "freespace": _freespace,
    "ghz_analyzer": _ghz_analyzer,
    "four_photon_family": _four_photon_family,
    "beamsplitter": _beamsplitter,
    "pbs": _pbs,
}


def named_device(name: str, params: Sequence[float] = ()) -> SetupSpec:
    """Look up a device from the library.

    Parameters by device: ``fourier(N, d=2)``, ``freespace(N, d, p)``,
    ``ghz_analyzer()``, ``four_photon_family(gamma)`` with gamma in radians,
    ``beamsplitter(d=2)``, ``pbs()``.
    """
    try:
        factory = DEVICES[name]
    except KeyError:
        raise UnknownDeviceError(f"unknown device {name!r}; known: {sorted(DEVICES)}") from None
    return factory(list(params))


# --- JSON form --------------------------------------------------------------


def matrix_to_json(a) -> list[list[dict]]:
    a = as_matrix(a)
    return [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in a]


def matrix_from_json(rows) -> np.ndarray:
    try:
        return as_matrix([[complex(e["re"], e["im"]) for e in row] for row in rows])
    except (TypeError, KeyError) as exc:
        raise ValueError(f"malformed matrix entry: {exc}") from exc


def setup_to_json(spec: SetupSpec) -> dict:
    doc: dict = {"kind": spec.kind, "d": spec.d, "N": spec.N}
    if spec.kind == POLARIZING:
        doc["matrices"] = [matrix_to_json(m) for m in spec.matrices]
    else:
        doc["matrix"] = matrix_to_json(spec.matrices[0])
    doc["input_locals"] = None if spec.input_locals is None else [matrix_to_json(m) for m in spec.input_locals]
    doc["output_locals"] = None if spec.output_locals is None else [matrix_to_json(m) for m in spec.output_locals]
    doc["input_occupation"] = None if spec.input_occupation is None else list(spec.input_occupation)
    if spec.label:
        doc["label"] = spec.label
    return doc


def setup_from_json(doc: dict) -> SetupSpec:
    kind = doc["kind"]
    if kind == POLARIZING:
        matrices = tuple(matrix_from_json(m) for m in doc["matrices"])
    else:
        matrices = (matrix_from_json(doc["matrix"]),)
    locs = {}
    for name in ("input_locals", "output_locals"):
        value = doc.get(name)
        locs[name] = None if value is None else tuple(matrix_from_json(m) for m in value)
    occ = doc.get("input_occupation")
    return SetupSpec(
        kind,
        int(doc["d"]),
        int(doc["N"]),
        matrices,
        input_occupation=None if occ is None else tuple(occ),
        label=doc.get("label", ""),
        **locs,
    )
