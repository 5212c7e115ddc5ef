"""Dimensionality of the manifolds of post-selected states reachable with bosons and fermions.

The dimension is estimated as the complex rank of the Jacobian of the map
``W' -> g~`` at random (Ginibre) points, where ``W'`` holds the ``N`` rows of
the scattering matrix that are fed by one particle each.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from iforge import kernels
from iforge.amplitude import qudit_columns
from iforge.errors import DimensionError, SizeLimitError
from iforge.fock import Species

log = logging.getLogger(__name__)

RANK_TOL = 1e-8
# singular values within this factor of the threshold trigger an extended-precision re-run
NEAR_THRESHOLD = 100.0
MAX_JACOBIAN_ROWS = 4096
MAX_JACOBIAN_N = 8


def fermion_bound(d: int, N: int) -> int:
    return (d - 1) * N * N - N + 2


def boson_bound(d: int, N: int) -> int:
    return d * N * N - 2 * N + 2


def species_bound(d: int, N: int, species: Species | str) -> int:
    species = Species.parse(species)
    return boson_bound(d, N) if species is Species.BOSON else fermion_bound(d, N)


def lossless_parameter_count(d: int, N: int) -> tuple[Fraction, Fraction]:
    """Parameters of a unitary ``dN x dN`` setup that reach ``W'``, and the bosonic surplus over them.

    Returns ``(K, boson_bound - K)`` with ``K = (d - 1/2) N^2 - N/2``.
    """
    K = Fraction(2 * d - 1, 2) * N * N - Fraction(N, 2)
    return K, boson_bound(d, N) - K


def _check_size(d: int, N: int):
    if N > MAX_JACOBIAN_N or d**N > MAX_JACOBIAN_ROWS:
        raise SizeLimitError(
            f"Jacobian limited to N <= {MAX_JACOBIAN_N} and d**N <= {MAX_JACOBIAN_ROWS} (d={d}, N={N})"
        )


def analytic_jacobian(W_prime, species: Species | str, d: int, N: int, dtype=np.complex128) -> np.ndarray:
    """Jacobian ``d g~[j_1..j_N] / d W'[l, c]``, shape ``(d**N, d*N*N)``.

    Columns are ordered row-major over ``W'`` entries, ``l * d*N + c``. Only
    columns selected by the index tuple carry a nonzero entry: the permanent
    of the complementary minor for bosons, the signed cofactor for fermions.
    """
    species = Species.parse(species)
    Wp = np.asarray(W_prime, dtype=complex)
    if Wp.shape != (N, d * N):
        raise DimensionError(f"W' must be {N}x{d * N}, got {Wp.shape}")
    _check_size(d, N)
    cols = qudit_columns(d, N)
    stack = np.transpose(Wp[:, cols], (1, 0, 2))  # (d**N, N rows l, N parties k)
    J = np.zeros((d**N, d * N * N), dtype=complex)
    rows = np.arange(d**N)
    keep = np.arange(N)
    for l in range(N):
        for k in range(N):
            minor = stack[:, keep != l][:, :, keep != k]
            if species is Species.BOSON:
                val = kernels.permanent_batch(minor, dtype=dtype)
            else:
                val = (-1) ** (l + k) * kernels.determinant_batch(minor, dtype=dtype)
            J[rows, l * d * N + cols[:, k]] = val.astype(complex)
    return J


def numerical_jacobian(W_prime, species: Species | str, d: int, N: int, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of ``g~`` along each complex-linear coordinate of ``W'``."""
    from iforge.amplitude import coefficient_tensor

    Wp = np.asarray(W_prime, dtype=complex)

    def g(w):
        full = np.zeros((d * N, d * N), dtype=complex)
        full[::d] = w
        return coefficient_tensor(full, species, d, N).flat()

    J = np.zeros((d**N, Wp.size), dtype=complex)
    for idx in range(Wp.size):
        e = np.zeros(Wp.size)
        e[idx] = step
        e = e.reshape(Wp.shape)
        J[:, idx] = (g(Wp + e) - g(Wp - e)) / (2 * step)
    return J


def jacobian_rank(J: np.ndarray, tol: float = RANK_TOL) -> tuple[int, np.ndarray]:
    s = np.linalg.svd(J, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0, s
    return int(np.count_nonzero(s > tol * s[0])), s


def _near_threshold(s: np.ndarray, tol: float) -> bool:
    if s.size == 0 or s[0] == 0:
        return False
    rel = s / s[0]
    return bool(np.any((rel > tol / NEAR_THRESHOLD) & (rel < tol * NEAR_THRESHOLD)))


def ginibre(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


@dataclass
class JacobianReport:
    d: int
    N: int
    species: Species
    rank: int
    singular_values: list[float]
    bound: int
    trials: int
    trial_ranks: list[int] = field(default_factory=list)
    extended_precision_reruns: int = 0

    @property
    def anomalous(self) -> bool:
        return len(set(self.trial_ranks)) > 1


def manifold_rank(
    d: int,
    N: int,
    species: Species | str,
    trials: int = 5,
    seed: int | np.random.SeedSequence = 0,
    tol: float = RANK_TOL,
) -> JacobianReport:
    """Maximum Jacobian rank over ``trials`` random ``W'`` drawn from a seeded Ginibre ensemble."""
    species = Species.parse(species)
    if trials < 1:
        raise ValueError("at least one trial is required")
    _check_size(d, N)
    rng = np.random.default_rng(seed)
    best, best_s, ranks, reruns = -1, np.array([]), [], 0
    for _ in range(trials):
        Wp = ginibre((N, d * N), rng)
        rank, s = jacobian_rank(analytic_jacobian(Wp, species, d, N), tol)
        if _near_threshold(s, tol):
            reruns += 1
            rank, s = jacobian_rank(analytic_jacobian(Wp, species, d, N, dtype=np.clongdouble), tol)
        ranks.append(rank)
        if rank > best:
            best, best_s = rank, s
    if len(set(ranks)) > 1:
        log.warning("rank differs across trials for d=%d N=%d %s: %s", d, N, species.value, ranks)
    return JacobianReport(
        d=d,
        N=N,
        species=species,
        rank=best,
        singular_values=[float(x) for x in best_s],
        bound=species_bound(d, N, species),
        trials=trials,
        trial_ranks=ranks,
        extended_precision_reruns=reruns,
    )


# --- reference table and table runs ----------------------------------------


@dataclass(frozen=True)
class ReferenceCell:
    species: Species
    d: int
    N: int
    value: int
    combinatorial_cap: bool


def reference_table() -> dict[tuple[str, int, int], ReferenceCell]:
    """Published Jacobian-rank table, keyed by ``(species, d, N)``."""
    text = resources.files("iforge").joinpath("data/table2_reference.csv").read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    out = {}
    for row in csv.DictReader(lines):
        cell = ReferenceCell(
            Species.parse(row["species"]),
            int(row["d"]),
            int(row["N"]),
            int(row["value"]),
            row["combinatorial_cap"].strip().lower() == "true",
        )
        out[(cell.species.value, cell.d, cell.N)] = cell
    return out


@dataclass
class TableRow:
    d: int
    N: int
    species: Species
    rank: int | None
    bound: int
    dN_power: int
    tight: bool | None
    seconds: float | None
    reference: int | None = None
    combinatorial_cap: bool = False
    status: str = "ok"
    report: JacobianReport | None = None

    @property
    def matches_reference(self) -> bool | None:
        if self.reference is None or self.rank is None:
            return None
        return self.rank == self.reference


def cell_seed(seed: int, d: int, N: int, species: Species) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), d, N, 0 if species is Species.BOSON else 1])


def _run_cell(d, N, species, trials, seed, reference) -> TableRow:
    bound = species_bound(d, N, species)
    ref = reference.get((species.value, d, N))
    row = TableRow(
        d=d,
        N=N,
        species=species,
        rank=None,
        bound=bound,
        dN_power=d**N,
        tight=None,
        seconds=None,
        reference=None if ref is None else ref.value,
        combinatorial_cap=bool(ref and ref.combinatorial_cap),
    )
    try:
        _check_size(d, N)
    except SizeLimitError:
        row.status = "skipped"
        return row
    t0 = time.perf_counter()
    rep = manifold_rank(d, N, species, trials=trials, seed=cell_seed(seed, d, N, species))
    row.seconds = time.perf_counter() - t0
    row.rank = rep.rank
    row.report = rep
    row.tight = rep.rank == min(bound, d**N)
    if rep.rank > bound or rep.rank > d**N:
        row.status = "bound-violation"
    elif row.reference is not None and rep.rank != row.reference:
        row.status = "mismatch"
    return row


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("IFORGE_THREADS", "1")))
    except ValueError:
        return 1


def table2(
    cells: Iterable[tuple[int, int, Species | str]],
    trials: int = 5,
    seed: int = 0,
    threads: int | None = None,
) -> list[TableRow]:
    """Jacobian ranks for the requested ``(d, N, species)`` cells, in the order given.

    Cells beyond the Jacobian size limits are returned with status ``skipped``.
    """
    reference = reference_table()
    cells = [(int(d), int(N), Species.parse(sp)) for d, N, sp in cells]
    threads = thread_cap() if threads is None else threads
    if threads <= 1:
        return [_run_cell(d, N, sp, trials, seed, reference) for d, N, sp in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: _run_cell(*c, trials, seed, reference), cells))


def reference_cells(species: Species | str | None = None) -> list[tuple[int, int, Species]]:
    sp = None if species is None else Species.parse(species)
    out = [
        (c.d, c.N, c.species)
        for c in reference_table().values()
        if sp is None or c.species is sp
    ]
    return sorted(out, key=lambda c: (c[2].value, c[0], c[1]))


TABLE_COLUMNS = ["d", "N", "species", "rank", "bound", "dN_power", "tight", "seconds"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, Species):
        return value.value
    return str(value)


def table_to_csv(rows: Sequence[TableRow], timings: bool = False) -> str:
    """CSV rendering; the ``seconds`` column stays empty unless ``timings`` is set."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS + ["reference", "status"])
    for r in rows:
        writer.writerow(
            [
                _fmt(r.d),
                _fmt(r.N),
                _fmt(r.species),
                _fmt(r.rank),
                _fmt(r.bound),
                _fmt(r.dN_power),
                _fmt(r.tight),
                _fmt(r.seconds) if timings else "",
                _fmt(r.reference),
                r.status,
            ]
        )
    return buf.getvalue()


def table_to_json(rows: Sequence[TableRow], timings: bool = False) -> list[dict]:
    out = []
    for r in rows:
        out.append(
            {
                "d": r.d,
                "N": r.N,
                "species": r.species.value,
                "rank": r.rank,
                "bound": r.bound,
                "dN_power": r.dN_power,
                "tight": r.tight,
                "seconds": r.seconds if timings else None,
                "reference": r.reference,
                "combinatorial_cap": r.combinatorial_cap,
                "status": r.status,
                "trial_ranks": None if r.report is None else r.report.trial_ranks,
                "singular_values": None if r.report is None else r.report.singular_values,
            }
        )
    return out
