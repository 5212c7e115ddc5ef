"""Many-particle amplitudes: coefficient tensors, Fock evolution and post-selection."""

from __future__ import annotations

import itertools
import math
import warnings
from typing import Mapping, Sequence

import numpy as np

from iforge import kernels
from iforge.errors import DimensionError, ImpossibleConditionError, SizeLimitError
from iforge.fock import (
    CoefficientTensor,
    FockSuperposition,
    ModeOccupation,
    Species,
    is_post_selected,
    occupation_to_assignment,
    occupations,
    omega,
    omega_inverse,
    qudit_index_to_occupation,
)
from iforge.scatter import as_matrix, reverse

MAX_EVOLVE_PARTICLES = 8
MAX_EVOLVE_MODES = 16


def _perm_or_det(stack: np.ndarray, species: Species) -> np.ndarray:
    if species is Species.BOSON:
        return kernels.permanent_batch(stack)
    return kernels.determinant_batch(stack)


def default_source_rows(d: int, N: int) -> tuple[int, ...]:
    """1-based rows ``1, d+1, ..., (N-1)d+1``: every particle in internal state 1."""
    return tuple(d * k + 1 for k in range(N))


def qudit_columns(d: int, N: int) -> np.ndarray:
    """0-based column of party ``k`` for every index tuple, shape ``(d**N, N)``, row-major."""
    idx = np.array(list(itertools.product(range(d), repeat=N)), dtype=int).reshape(-1, N)
    return idx + d * np.arange(N)


def coefficient_tensor(
    W,
    species: Species | str,
    d: int,
    N: int,
    source_rows: Sequence[int] | None = None,
) -> CoefficientTensor:
    """Unnormalized post-selected tensor for one particle per listed source row.

    Entry ``(j_1, ..., j_N)`` is the permanent (bosons) or determinant
    (fermions) of ``A[m, k] = W[source_rows[m], d(k-1) + j_k]``.
    """
    species = Species.parse(species)
    W = as_matrix(W)
    rows = default_source_rows(d, N) if source_rows is None else tuple(source_rows)
    if len(rows) != N:
        raise DimensionError(f"need {N} source rows, got {len(rows)}")
    if W.shape[1] < d * N:
        raise DimensionError(f"W has {W.shape[1]} columns, needs at least d*N = {d * N}")
    if any(not 1 <= r <= W.shape[0] for r in rows):
        raise DimensionError(f"source rows {rows} outside 1..{W.shape[0]}")
    if species is Species.FERMION and len(set(rows)) < N:
        return CoefficientTensor.zeros(d, N)
    sub = W[np.array(rows) - 1]
    cols = qudit_columns(d, N)
    stack = np.transpose(sub[:, cols], (1, 0, 2))
    return CoefficientTensor(_perm_or_det(stack, species).reshape((d,) * N))


def _fock_norm(occ: Sequence[int]) -> float:
    return math.sqrt(math.prod(math.factorial(c) for c in occ))


def evolve_fock(
    state: FockSuperposition,
    W,
    species: Species | str,
    outputs: Sequence[Sequence[int]] | None = None,
) -> FockSuperposition:
    """Propagate a Fock superposition through ``W`` (rows: input modes, columns: output modes).

    All output occupations are enumerated in ascending lexicographic order
    unless ``outputs`` restricts the set. Amplitudes refer to normalized Fock
    vectors on both sides.
    """
    species = Species.parse(species)
    W = as_matrix(W)
    n_in, m = W.shape
    N = state.N
    if state.n > n_in:
        if any(any(occ[n_in:]) for occ, a in state.amplitudes.items() if a != 0):
            raise DimensionError(f"input occupies modes beyond the {n_in} rows of W")
    if outputs is None:
        if N > MAX_EVOLVE_PARTICLES or m > MAX_EVOLVE_MODES:
            raise SizeLimitError(
                f"full enumeration limited to N <= {MAX_EVOLVE_PARTICLES} and "
                f"{MAX_EVOLVE_MODES} output modes (got N={N}, {m} modes)"
            )
        outputs = occupations(m, N)
    else:
        outputs = [tuple(o) for o in outputs]
        if any(len(o) != m or sum(o) != N for o in outputs):
            raise DimensionError(f"requested outputs must be {m}-mode occupations of {N} particles")
    result = np.zeros(len(outputs), dtype=complex)
    if not outputs:
        return FockSuperposition(m, N, {})

    cols = np.array([occupation_to_assignment(ModeOccupation(o)) for o in outputs], dtype=int) - 1
    out_norm = np.array([_fock_norm(o) for o in outputs])
    for occ, amp in state.amplitudes.items():
        if amp == 0:
            continue
        if species is Species.FERMION and max(occ) > 1:
            continue
        rows = np.array(occupation_to_assignment(ModeOccupation(occ[:n_in])), dtype=int) - 1
        stack = W[rows][:, cols].transpose(1, 0, 2)
        result += amp * _perm_or_det(stack, species) / (out_norm * _fock_norm(occ))
    if species is Species.FERMION:
        result[np.array([max(o) > 1 for o in outputs])] = 0.0
    return FockSuperposition(m, N, dict(zip(outputs, result)))


def post_select(state: FockSuperposition, d: int, N: int) -> tuple[CoefficientTensor, float]:
    """Keep the terms with one particle per group of ``d`` modes; return the tensor and its weight."""
    if state.n != d * N:
        raise DimensionError(f"state has {state.n} modes, expected d*N = {d * N}")
    kept = {
        occ: amp for occ, amp in state.amplitudes.items() if is_post_selected(ModeOccupation(occ, d))
    }
    tensor = omega_inverse(FockSuperposition(state.n, N, kept), d, N)
    prob = tensor.norm_squared()
    if prob > 1.0 + 1e-9:
        warnings.warn(f"success probability {prob:.6g} exceeds 1; is W sub-unitary?", stacklevel=2)
    return tensor, prob


def post_selected_outputs(d: int, N: int) -> list[tuple[int, ...]]:
    return [qudit_index_to_occupation(idx, d) for idx in itertools.product(range(1, d + 1), repeat=N)]


def generate(
    state: CoefficientTensor | FockSuperposition,
    W,
    species: Species | str,
    d: int | None = None,
    N: int | None = None,
) -> tuple[CoefficientTensor, float]:
    """Scatter an input state through ``W`` and post-select onto ``N`` qudits of dimension ``d``.

    Only the post-selected output occupations are evaluated. ``d`` and ``N``
    default to those of an input tensor.
    """
    if isinstance(state, CoefficientTensor):
        d = state.d if d is None else d
        N = state.N if N is None else N
        state = omega(state)
    if d is None or N is None:
        raise ValueError("d and N are required for a Fock-state input")
    W = as_matrix(W)
    if W.shape[1] < d * N:
        raise DimensionError(f"W has {W.shape[1]} columns, needs d*N = {d * N}")
    W = W[:, : d * N]
    out = evolve_fock(state, W, species, outputs=post_selected_outputs(d, N))
    return post_select(out, d, N)


def detection_overlap(
    signal: CoefficientTensor,
    W,
    target: CoefficientTensor,
    species: Species | str,
) -> complex:
    """Amplitude ``<signal| M(W^dag) |target>`` of detecting ``signal`` when ``target`` is sent back through ``W``."""
    W = as_matrix(W)
    if (signal.d, signal.N) != (target.d, target.N):
        raise DimensionError("signal and target tensors must have the same shape")
    d, N = signal.d, signal.N
    if W.shape != (d * N, d * N):
        raise DimensionError(f"W must be {d * N}x{d * N} for d={d}, N={N}, got {W.shape}")
    back, _ = generate(target, reverse(W), species)
    return complex(np.vdot(signal.amplitudes, back.amplitudes))


def conditional_state(
    g: CoefficientTensor, fixed: Mapping[int, int]
) -> tuple[CoefficientTensor, float]:
    """Slice ``g`` at fixed 1-based party outcomes and renormalize.

    Returns the state of the remaining parties and the conditional probability
    of the fixed outcomes.
    """
    d, N = g.d, g.N
    if not fixed:
        total = g.norm_squared()
        if total == 0:
            raise ImpossibleConditionError("the zero tensor cannot be conditioned")
        return g.normalized(), 1.0
    for party, outcome in fixed.items():
        if not 1 <= party <= N:
            raise DimensionError(f"party {party} outside 1..{N}")
        if not 1 <= outcome <= d:
            raise DimensionError(f"outcome {outcome} outside 1..{d}")
    if len(fixed) >= N:
        raise DimensionError("at least one party must remain unconditioned")
    index = tuple(fixed[k + 1] - 1 if (k + 1) in fixed else slice(None) for k in range(N))
    part = g.amplitudes[index]
    weight = float(np.vdot(part, part).real)
    total = g.norm_squared()
    if weight <= 1e-300 or total == 0:
        raise ImpossibleConditionError(f"outcomes {dict(fixed)} have zero probability")
    return CoefficientTensor(part / math.sqrt(weight)), weight / total


def canonical_phase(t: CoefficientTensor, rel_tol: float = 1e-12) -> CoefficientTensor:
    """Rotate the global phase so the first non-negligible amplitude is real and positive."""
    flat = t.flat()
    mags = np.abs(flat)
    if mags.size == 0 or mags.max() == 0:
        return t
    first = int(np.flatnonzero(mags > rel_tol * mags.max())[0])
    phase = flat[first] / mags[first]
    out = flat / phase
    out[first] = mags[first]  # exactly real, no rounding residue in the imaginary part
    return CoefficientTensor(out.reshape(t.amplitudes.shape))


def fidelity(a: CoefficientTensor, b: CoefficientTensor) -> float:
    """``|<a|b>|^2 / (<a|a><b|b>)``, insensitive to normalization and global phase."""
    if a.amplitudes.shape != b.amplitudes.shape:
        raise DimensionError("fidelity needs tensors of equal shape")
    na, nb = a.norm_squared(), b.norm_squared()
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2 / (na * nb))
