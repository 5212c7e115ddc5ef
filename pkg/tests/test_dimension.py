import itertools
from fractions import Fraction

import numpy as np
import pytest

from iforge.dimension import (
    analytic_jacobian,
    boson_bound,
    fermion_bound,
    ginibre,
    jacobian_rank,
    lossless_parameter_count,
    manifold_rank,
    numerical_jacobian,
    reference_cells,
    reference_table,
    table2,
    table_to_csv,
    table_to_json,
)
from iforge.errors import DimensionError, SizeLimitError
from iforge.fock import Species


def test_bound_examples():
    assert fermion_bound(2, 4) == 14
    assert fermion_bound(3, 3) == 17
    assert fermion_bound(2, 2) == 4
    assert boson_bound(2, 8) == 114
    assert boson_bound(2, 6) == 62
    assert boson_bound(3, 3) == 23


def test_lossless_parameter_count():
    assert lossless_parameter_count(2, 2)[0] == 5
    assert lossless_parameter_count(2, 4) == (22, 4)
    assert lossless_parameter_count(3, 3) == (21, 2)
    K, _ = lossless_parameter_count(3, 2)
    assert isinstance(K, Fraction) and (2 * K).denominator == 1


def test_jacobian_single_particle_is_identity():
    Wp = ginibre((1, 2), np.random.default_rng(0))
    np.testing.assert_allclose(analytic_jacobian(Wp, "boson", 2, 1), np.eye(2))


def test_jacobian_two_fermions_bilinear():
    Wp = ginibre((2, 4), np.random.default_rng(1))
    J = analytic_jacobian(Wp, "fermion", 2, 2)
    # g[j1, j2] = W'[0, a] W'[1, b] - W'[0, b] W'[1, a], a = j1 - 1, b = 2 + j2 - 1
    for j1, j2 in itertools.product(range(2), repeat=2):
        row = 2 * j1 + j2
        a, b = j1, 2 + j2
        assert J[row, a] == pytest.approx(Wp[1, b])
        assert J[row, b] == pytest.approx(-Wp[1, a])
        assert J[row, 4 + b] == pytest.approx(Wp[0, a])


@pytest.mark.parametrize("d, N", [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4)])
def test_jacobian_matches_finite_differences(d, N):
    rng = np.random.default_rng(10 * d + N)
    for trial in range(50 if d ** N <= 27 else 10):
        species = Species.BOSON if trial % 2 == 0 else Species.FERMION
        Wp = ginibre((N, d * N), rng)
        diff = analytic_jacobian(Wp, species, d, N) - numerical_jacobian(Wp, species, d, N)
        assert np.max(np.abs(diff)) < 1e-5


def test_jacobian_shape_and_size_errors():
    with pytest.raises(DimensionError):
        analytic_jacobian(np.zeros((2, 3)), "boson", 2, 2)
    with pytest.raises(SizeLimitError):
        manifold_rank(3, 8, "boson")


@pytest.mark.parametrize(
    "d, N, species, expected",
    [(2, 4, "boson", 16), (2, 4, "fermion", 14), (3, 3, "boson", 23), (3, 3, "fermion", 17)],
)
def test_manifold_rank_examples(d, N, species, expected):
    rep = manifold_rank(d, N, species, trials=5, seed=0)
    assert rep.rank == expected
    assert set(rep.trial_ranks) == {expected}
    assert rep.rank <= min(rep.bound, d ** N, d * N * N)
    assert len(rep.singular_values) == min(d ** N, d * N * N)


def test_manifold_rank_is_reproducible():
    a = manifold_rank(2, 3, "boson", trials=2, seed=42)
    b = manifold_rank(2, 3, "boson", trials=2, seed=42)
    assert a.singular_values == b.singular_values


def test_jacobian_rank_of_zero_matrix():
    assert jacobian_rank(np.zeros((3, 3)))[0] == 0


def test_boson_rank_dominates_fermion_rank():
    for d, N in [(2, 2), (2, 3), (2, 5), (3, 2), (3, 4), (4, 3)]:
        b = manifold_rank(d, N, "boson", trials=1).rank
        f = manifold_rank(d, N, "fermion", trials=1).rank
        assert b >= f


def test_reference_table_contents():
    ref = reference_table()
    assert len(ref) == 40
    assert ref[("boson", 2, 8)].value == 114
    capped = sorted((c.d, c.N) for c in ref.values() if c.combinatorial_cap)
    assert capped == [(3, 2), (4, 2), (5, 2)]
    assert all(c.species is Species.BOSON for c in ref.values() if c.combinatorial_cap)


def test_table_output_is_deterministic_and_marks_skips():
    cells = [(2, 3, "fermion"), (2, 4, "boson"), (3, 8, "boson")]
    rows = table2(cells, trials=2, seed=3, threads=1)
    assert [r.status for r in rows] == ["ok", "ok", "skipped"]
    text = table_to_csv(rows)
    assert text == table_to_csv(table2(cells, trials=2, seed=3, threads=2))
    lines = text.splitlines()
    assert lines[0].startswith("d,N,species,rank,bound,dN_power,tight,seconds")
    assert lines[1] == "2,3,fermion,8,8,8,true,,8,ok"
    assert table_to_json(rows)[0]["singular_values"] is not None
    assert table_to_csv(rows, timings=True).splitlines()[1].split(",")[7] != ""


def test_reference_cells_filter():
    cells = reference_cells("fermion")
    assert len(cells) == 19
    assert all(sp is Species.FERMION for _, _, sp in cells)
