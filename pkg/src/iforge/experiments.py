"""Reproducible experiment pipelines behind the command-line interface."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from iforge.amplitude import canonical_phase, conditional_state, fidelity, generate
from iforge.entanglement import rank_report
from iforge.errors import UndefinedRankError
from iforge.fock import CoefficientTensor, FockSuperposition, Species
from iforge.scatter import compile_setup, ghz_analyzer_block, named_device

H, V = 1, 2
FAMILY_STEPS = 33
FIDELITY_TOL = 1e-9
PROBABILITY_TOL = 1e-10


def tensor_to_json(t: CoefficientTensor) -> list[dict]:
    return [
        {
            "index": [int(i) + 1 for i in idx],
            # adding 0.0 turns -0.0 into 0.0
            "re": float(t.amplitudes[idx].real) + 0.0,
            "im": float(t.amplitudes[idx].imag) + 0.0,
        }
        for idx in np.ndindex(t.amplitudes.shape)
    ]


def align_phase(a: CoefficientTensor, reference: CoefficientTensor) -> CoefficientTensor:
    """Multiply ``a`` by the global phase that best matches ``reference``."""
    overlap = np.vdot(a.amplitudes, reference.amplitudes)
    if abs(overlap) == 0:
        return a
    return CoefficientTensor(a.amplitudes * overlap / abs(overlap))


# --- simulate -----------------------------------------------------------------


def simulate(setup, input_state, species, d: int, N: int, input_rank: int = 1) -> dict:
    """Compile, scatter, post-select and bracket the Schmidt rank of the result."""
    species = Species.parse(species)
    W = compile_setup(setup)
    g, prob = generate(input_state, W, species, d=d, N=N)
    report = None
    if prob > 0:
        try:
            report = rank_report(g, setup.input_occupation, input_rank).to_json()
        except UndefinedRankError:
            report = None
    normalized = canonical_phase(g.normalized()) if prob > 0 else g
    return {
        "setup": setup.label or setup.kind,
        "species": species.value,
        "d": d,
        "N": N,
        "success_probability": prob,
        "tensor": tensor_to_json(normalized),
        "unnormalized_tensor": tensor_to_json(canonical_phase(g)),
        "rank_report": report,
    }


# --- four-photon family -------------------------------------------------------


def family_input() -> FockSuperposition:
    """Two horizontal and two vertical photons in spatial modes 1 and 2, padded to eight modes."""
    amp = 1 / math.sqrt(3)
    pad = (0, 0, 0, 0)
    return FockSuperposition.from_terms(
        8, 4, [((2, 0, 0, 2) + pad, amp), ((0, 2, 2, 0) + pad, amp), ((1, 1, 1, 1) + pad, amp)]
    )


def family_expected(gamma: float) -> CoefficientTensor:
    """``(sqrt2 sin^2(2g) GHZ4 + cos(4g) Psi+ Psi+) / (2 sqrt3)``, unnormalized like the simulation."""
    ghz = np.zeros((2,) * 4, dtype=complex)
    ghz[0, 0, 1, 1] = ghz[1, 1, 0, 0] = 1 / math.sqrt(2)
    psi = np.zeros((2, 2), dtype=complex)
    psi[0, 1] = psi[1, 0] = 1 / math.sqrt(2)
    s, c4 = math.sin(2 * gamma), math.cos(4 * gamma)
    return CoefficientTensor((math.sqrt(2) * s**2 * ghz + c4 * np.multiply.outer(psi, psi)) / (2 * math.sqrt(3)))


def family_probability(gamma: float) -> float:
    return (math.cos(4 * gamma) ** 2 + 2 * math.sin(2 * gamma) ** 4) / 12


@dataclass
class FamilyPoint:
    gamma: float
    tensor: CoefficientTensor
    success_probability: float
    expected_probability: float
    fidelity: float
    max_deviation: float

    @property
    def ok(self) -> bool:
        return (
            self.fidelity >= 1 - FIDELITY_TOL
            and abs(self.success_probability - self.expected_probability) <= PROBABILITY_TOL
        )


def family_point(gamma: float, species: Species | str = Species.BOSON) -> FamilyPoint:
    W = compile_setup(named_device("four_photon_family", [gamma]))
    g, prob = generate(family_input(), W, species, d=2, N=4)
    expected = family_expected(gamma)
    aligned = align_phase(g, expected)
    return FamilyPoint(
        gamma=gamma,
        tensor=aligned,
        success_probability=prob,
        expected_probability=family_probability(gamma),
        fidelity=fidelity(g, expected),
        max_deviation=float(np.max(np.abs(aligned.amplitudes - expected.amplitudes))),
    )


def gamma_grid(start: float = 0.0, stop: float = math.pi / 4, steps: int = FAMILY_STEPS) -> np.ndarray:
    if steps < 1:
        raise ValueError("sweep needs at least one point")
    return np.linspace(start, stop, steps)


def family_sweep(gammas: Sequence[float], species: Species | str = Species.BOSON) -> list[FamilyPoint]:
    return [family_point(float(g), species) for g in gammas]


def family_csv_header() -> list[str]:
    cols = ["gamma", "success_probability", "expected_probability", "fidelity", "max_deviation"]
    for idx in np.ndindex((2,) * 4):
        label = "".join("HV"[i] for i in idx)
        cols += [f"{label}_re", f"{label}_im"]
    return cols


def family_csv_row(p: FamilyPoint) -> list[float]:
    row = [p.gamma, p.success_probability, p.expected_probability, p.fidelity, p.max_deviation]
    for z in p.tensor.flat():
        row += [float(z.real), float(z.imag)]
    return row


# --- GHZ entanglement swapping ------------------------------------------------


def ghz_swap_matrix() -> np.ndarray:
    """12x12 setup: analyzer on photons 1, 3, 5 and free propagation of photons 2, 4, 6."""
    W = np.zeros((12, 12), dtype=complex)
    analyzer_rows = [0, 1, 4, 5, 8, 9]
    analyzer_cols = [0, 4, 8]
    W[np.ix_(analyzer_rows, analyzer_cols)] = ghz_analyzer_block()
    for group in (1, 3, 5):
        W[2 * group : 2 * group + 2, 2 * group : 2 * group + 2] = np.eye(2)
    return W


def pair_input(entangled: bool = True) -> CoefficientTensor:
    """Three pairs (1,2), (3,4), (5,6): each in ``(HH + VV)/sqrt2`` or, if not entangled, ``HH``."""
    pair = np.zeros((2, 2), dtype=complex)
    if entangled:
        pair[0, 0] = pair[1, 1] = 1 / math.sqrt(2)
    else:
        pair[0, 0] = 1
    t = np.multiply.outer(np.multiply.outer(pair, pair), pair)
    return CoefficientTensor(t)


def ghz_tensor(N: int) -> CoefficientTensor:
    t = np.zeros((2,) * N, dtype=complex)
    t[(0,) * N] = t[(1,) * N] = 1 / math.sqrt(2)
    return CoefficientTensor(t)


def ghz_swap(species: Species | str = Species.BOSON, entangled: bool = True) -> dict:
    species = Species.parse(species)
    g, prob = generate(pair_input(entangled), ghz_swap_matrix(), species)
    report = {
        "species": species.value,
        "pairs": "bell" if entangled else "product",
        "success_probability": prob,
        "detector_outcomes": {"1": H, "3": H, "5": H},
        "heralding_probability": 0.0,
        "conditional_probability": 0.0,
        "fidelity_ghz3": 0.0,
        "state_246": None,
    }
    if prob == 0:
        return report
    cond, p_cond = conditional_state(g, {1: H, 3: H, 5: H})
    report["conditional_probability"] = p_cond
    report["heralding_probability"] = prob * p_cond
    report["fidelity_ghz3"] = fidelity(cond, ghz_tensor(3))
    report["state_246"] = tensor_to_json(canonical_phase(cond))
    return report
