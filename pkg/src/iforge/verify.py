"""Cross-module property suites run by ``iforge verify``.

Each suite draws its own random instances from a seeded generator and stops
at the first violated property, recording it as a counterexample. The
permanent and determinant kernels under test are injectable so a deliberately
broken kernel can be shown to fail.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from iforge import kernels, minors, oracle
from iforge.amplitude import coefficient_tensor, evolve_fock
from iforge.fock import FockSuperposition, Species
from iforge.scatter import compile_setup, matrix_to_json, random_unitary, SetupSpec

SIZES = ("small", "large")
REL_TOL = 1e-10


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    counterexample: dict | None = None

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "checks": self.checks, "counterexample": self.counterexample}


@dataclass
class Kernels:
    permanent: Callable = kernels.permanent
    determinant: Callable = kernels.determinant


@dataclass
class _Run:
    name: str
    checks: int = 0
    counterexample: dict | None = field(default=None)

    def check(self, ok: bool, **details) -> bool:
        self.checks += 1
        if not ok and self.counterexample is None:
            self.counterexample = {k: _jsonable(v) for k, v in details.items()}
        return ok

    def result(self) -> SuiteResult:
        return SuiteResult(self.name, self.counterexample is None, self.checks, self.counterexample)


def _jsonable(v):
    if isinstance(v, np.ndarray) and v.ndim == 2:
        return matrix_to_json(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v]
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, np.generic):
        return v.item()
    return v


def _rel(a, b) -> float:
    scale = max(1.0, float(np.max(np.abs(b))) if np.size(b) else 1.0)
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) / scale


def _ginibre(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def suite_oracle(rng: np.random.Generator, size: str, k: Kernels) -> SuiteResult:
    run = _Run("oracle")
    count = 500 if size == "large" else 60
    for n in range(1, 9 if size == "large" else 7):
        for _ in range(3):
            a = _ginibre(rng, (n, n))
            ref = oracle.naive_permanent(a)
            got = k.permanent(a)
            if not run.check(_rel(got, ref) < REL_TOL, kernel="permanent", matrix=a, expected=ref, got=got):
                return run.result()
            glynn = kernels.permanent_glynn(a)
            if not run.check(_rel(got, glynn) < REL_TOL, kernel="permanent vs glynn", matrix=a, expected=glynn, got=got):
                return run.result()
            ref = oracle.naive_determinant(a)
            got = k.determinant(a)
            if not run.check(_rel(got, ref) < REL_TOL, kernel="determinant", matrix=a, expected=ref, got=got):
                return run.result()
    for _ in range(count):
        N = int(rng.integers(1, 6 if size == "large" else 5))
        d = int(rng.integers(1, 4))
        species = Species.BOSON if rng.integers(2) == 0 else Species.FERMION
        W = _ginibre(rng, (d * N, d * N))
        got = coefficient_tensor(W, species, d, N).amplitudes
        ref = oracle.coefficient_tensor_oracle(W, species, d, N).amplitudes
        if not run.check(_rel(got, ref) < REL_TOL, kernel="coefficient_tensor", species=species.value, d=d, N=N, matrix=W):
            return run.result()
    return run.result()


def _random_fock_input(rng, n, N, species) -> FockSuperposition:
    if species is Species.FERMION:
        modes = rng.choice(n, size=N, replace=False)
    else:
        modes = rng.integers(0, n, size=N)
    occ = np.bincount(modes, minlength=n)
    return FockSuperposition.from_terms(n, N, [(tuple(int(c) for c in occ), 1.0)])


def _unitary_cases(size):
    cases = [(d, N) for d in (1, 2, 3, 4) for N in (1, 2, 3, 4) if d * N <= 8 and N >= 1]
    return cases * (8 if size == "large" else 1)


def suite_unitarity(rng: np.random.Generator, size: str, k: Kernels) -> SuiteResult:
    run = _Run("unitarity")
    n_cases = 100 if size == "large" else 20
    cases = _unitary_cases(size)
    for i in range(n_cases):
        d, N = cases[i % len(cases)]
        for species in Species:
            U = random_unitary(d * N, rng)
            state = _random_fock_input(rng, d * N, N, species)
            total = evolve_fock(state, U, species).norm_squared()
            if not run.check(abs(total - 1) < 1e-9, species=species.value, d=d, N=N, matrix=U, total=total):
                return run.result()
    return run.result()


def suite_pauli(rng: np.random.Generator, size: str, k: Kernels) -> SuiteResult:
    run = _Run("pauli")
    for _ in range(40 if size == "large" else 10):
        n = int(rng.integers(2, 7))
        N = int(rng.integers(2, min(n, 4) + 1))
        U = random_unitary(n, rng)
        out = evolve_fock(_random_fock_input(rng, n, N, Species.FERMION), U, Species.FERMION)
        for occ, amp in out.amplitudes.items():
            if max(occ) > 1 and not run.check(abs(amp) < 1e-12, occupation=list(occ), amplitude=amp, matrix=U):
                return run.result()
    return run.result()


def suite_hom(rng: np.random.Generator, size: str, k: Kernels) -> SuiteResult:
    run = _Run("hom")
    bs = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    for d in (2, 3):
        W = compile_setup(SetupSpec.non_polarizing(bs, d))
        for species in Species:
            g = coefficient_tensor(W, species, d, 2)
            norm = g.norm_squared()
            if species is Species.BOSON:
                run.check(norm < 1e-12, species="boson", d=d, norm=norm)
            else:
                run.check(abs(norm - 1) < 1e-12, species="fermion", d=d, norm=norm)
    return run.result()


def suite_reconstruction(rng: np.random.Generator, size: str, k: Kernels) -> SuiteResult:
    run = _Run("reconstruction")
    for _ in range(200 if size == "large" else 40):
        N = int(rng.integers(1, 6))
        Wp = _ginibre(rng, (N, 2 * N))
        full = np.zeros((2 * N, 2 * N), dtype=complex)
        full[::2] = Wp
        ref = coefficient_tensor(full, Species.FERMION, 2, N).amplitudes
        got = minors.reconstruct(minors.decompose(Wp, 2)).amplitudes
        if not run.check(_rel(got, ref) < 1e-9, N=N, matrix=Wp):
            return run.result()
    for d, N in itertools.product((3, 4), (2, 3, 4)):
        Wp = _ginibre(rng, (N, d * N))
        full = np.zeros((d * N, d * N), dtype=complex)
        full[::d] = Wp
        ref = coefficient_tensor(full, Species.FERMION, d, N).amplitudes
        got = minors.reconstruct(minors.decompose(Wp, d)).amplitudes
        if not run.check(_rel(got, ref) < 1e-9, d=d, N=N, matrix=Wp):
            return run.result()
    return run.result()


def suite_minor_ranks(rng: np.random.Generator, size: str, k: Kernels) -> SuiteResult:
    run = _Run("minor_ranks")
    seed = int(rng.integers(2**31))
    for N in range(2, 7 if size == "large" else 6):
        full = minors.minor_map_rank(N, seed=seed)
        span = minors.spanning_minor_rank(N, seed=seed)
        expected = N * N - N + 1
        if not run.check(full == expected and span == full, N=N, expected=expected, full=full, spanning=span):
            return run.result()
    return run.result()


SUITES = {
    "oracle": suite_oracle,
    "unitarity": suite_unitarity,
    "pauli": suite_pauli,
    "hom": suite_hom,
    "reconstruction": suite_reconstruction,
    "minor_ranks": suite_minor_ranks,
}


def run_suites(seed: int = 0, size: str = "small", kernel_set: Kernels | None = None, only=None) -> list[SuiteResult]:
    if size not in SIZES:
        raise ValueError(f"size must be one of {SIZES}, got {size!r}")
    kernel_set = kernel_set or Kernels()
    out = []
    for i, (name, suite) in enumerate(SUITES.items()):
        if only is not None and name not in only:
            continue
        rng = np.random.default_rng([seed, i])
        out.append(suite(rng, size, kernel_set))
    return out
