import itertools
import json
import math

import numpy as np
import pytest

from iforge.amplitude import coefficient_tensor, fidelity
from iforge.entanglement import (
    bipartite_rank,
    bipartitions,
    combinatorial_bound,
    max_bipartite_rank,
    permutation_representation,
    rank_report,
)
from iforge.errors import UndefinedRankError
from iforge.fock import CoefficientTensor, Species
from iforge.scatter import SetupSpec, compile_setup, fourier_matrix, random_unitary, unitary_with_first_row

H, V = [1, 0], [0, 1]


def ghz4():
    t = np.zeros((2,) * 4)
    t[0, 0, 0, 0] = t[1, 1, 1, 1] = 1 / math.sqrt(2)
    return CoefficientTensor(t)


def w4():
    t = np.zeros((2,) * 4)
    for k in range(4):
        idx = [1] * 4
        idx[k] = 0
        t[tuple(idx)] = 0.5
    return CoefficientTensor(t)


def test_combinatorial_bound_examples():
    assert combinatorial_bound(4, (1, 1, 1, 1)) == 24
    assert combinatorial_bound(4, (4, 0, 0, 0)) == 1
    assert combinatorial_bound(4, (2, 2, 0, 0), input_rank=2) == 12
    assert combinatorial_bound(3) == 6


def test_bipartitions_contain_party_one_in_order():
    parts = bipartitions(4)
    assert len(parts) == 2 ** 3 - 1
    assert parts == sorted(parts)
    assert all(p[0] == 1 for p in parts)


def test_bipartite_ranks_of_standard_states():
    product = CoefficientTensor.product([H, [0.6, 0.8], V, [1, 1j]])
    assert all(bipartite_rank(product, p) == 1 for p in bipartitions(4))
    assert all(bipartite_rank(ghz4(), p) == 2 for p in bipartitions(4))
    assert max_bipartite_rank(ghz4()) == (2, (1,))
    assert max_bipartite_rank(w4())[0] == 2
    rng = np.random.default_rng(0)
    generic = CoefficientTensor(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    assert max_bipartite_rank(generic)[0] == 2


def test_hom_output_with_orthogonal_polarizations_is_entangled():
    bs = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    g = coefficient_tensor(compile_setup(SetupSpec.non_polarizing(bs, 2)), "boson", 2, 2, source_rows=(1, 4))
    assert bipartite_rank(g, (1,)) == 2


def test_zero_tensor_rank_is_undefined():
    with pytest.raises(UndefinedRankError):
        max_bipartite_rank(CoefficientTensor.zeros(2, 3))


def test_rank_report_serializes():
    rep = rank_report(ghz4(), (1, 1, 1, 1))
    doc = json.loads(json.dumps(rep.to_json()))
    assert doc["combinatorial_upper"] == 24
    assert doc["bipartite_lower"] == 2
    assert doc["bipartition_achieving_lower"] == [1]
    assert len(doc["spectra"]) == 7
    assert rep.spectral_gap() is None  # the achieving cut is full rank


def test_spectral_gap_reports_borderline_ranks():
    t = np.zeros((3, 3))
    t[0, 0] = t[1, 1] = 1 / math.sqrt(2)
    t[2, 2] = 1e-10
    rep = rank_report(CoefficientTensor(t))
    assert rep.bipartite_lower == 2
    assert rep.spectral_gap() == pytest.approx(1 / math.sqrt(2) / 1e-10)


def test_free_space_states_are_permutation_symmetric():
    p, N = 0.3, 3
    coeffs, t = permutation_representation(np.full((N, N), math.sqrt(p)), [H, V, V], "boson")
    assert all(c == pytest.approx(p ** (N / 2)) for c in coeffs.values())
    for perm in itertools.permutations(range(N)):
        np.testing.assert_allclose(np.transpose(t.amplitudes, perm), t.amplitudes, atol=1e-12)


def test_identity_has_one_path():
    for species in Species:
        coeffs, _ = permutation_representation(np.eye(3), [H, V, H], species)
        assert coeffs[(1, 2, 3)] == 1
        assert sum(abs(c) for c in coeffs.values()) == 1


# Brute-force amplitudes of the four-port Fourier multiport (boson, 1/sqrt(N) normalization).
FOURIER_VVHH = {(1, 1, 2, 2): 0.125j, (1, 2, 2, 1): -0.125j, (2, 1, 1, 2): -0.125j, (2, 2, 1, 1): 0.125j}
FOURIER_HVHV = {(1, 2, 1, 2): -0.25, (2, 1, 2, 1): 0.25}
FOURIER_HVVV = {(1, 2, 2, 2): -0.125, (2, 1, 2, 2): 0.125, (2, 2, 1, 2): -0.125, (2, 2, 2, 1): 0.125}


@pytest.mark.parametrize(
    "states, frozen",
    [([V, V, H, H], FOURIER_VVHH), ([H, V, H, V], FOURIER_HVHV), ([H, V, V, V], FOURIER_HVVV)],
)
def test_fourier_amplitudes_match_frozen_values(states, frozen):
    _, t = permutation_representation(fourier_matrix(4), states, "boson")
    got = dict(t.nonzero(1e-12))
    assert set(got) == set(frozen)
    for idx, amp in frozen.items():
        assert abs(got[idx] - amp) < 1e-12


def test_fourier_alternating_input_gives_ghz_type_state():
    _, t = permutation_representation(fourier_matrix(4), [H, V, H, V], "boson")
    assert all(bipartite_rank(t, p) == 2 for p in bipartitions(4))
    # flipping parties 2 and 4 maps it onto GHZ4 up to a relative sign
    flipped = np.flip(t.amplitudes, axis=(1, 3))
    t2 = np.zeros((2,) * 4)
    t2[0, 0, 0, 0], t2[1, 1, 1, 1] = -1, 1
    assert fidelity(CoefficientTensor(flipped), CoefficientTensor(t2)) == pytest.approx(1)


def test_fourier_vvhh_input_gives_two_singlets():
    _, t = permutation_representation(fourier_matrix(4), [V, V, H, H], "boson")
    assert bipartite_rank(t, (1, 3)) == 1
    assert bipartite_rank(t, (1, 2)) == 4
    singlet = np.array([[0, 1], [-1, 0]]) / math.sqrt(2)
    pairs = np.transpose(np.multiply.outer(singlet, singlet), (0, 2, 1, 3))
    assert fidelity(t, CoefficientTensor(pairs)) == pytest.approx(1)


def test_fourier_w_state():
    _, t = permutation_representation(fourier_matrix(4), [H, V, V, V], "boson")
    mags = [abs(a) for _, a in t.nonzero(1e-12)]
    assert len(mags) == 4 and max(mags) - min(mags) < 1e-12
    assert fidelity(t, w4()) < 1
    assert max_bipartite_rank(t)[0] == 2


@pytest.mark.parametrize("species", list(Species))
def test_permutation_representation_matches_pipeline(species):
    rng = np.random.default_rng(5)
    for _ in range(10):
        N = int(rng.integers(1, 6))
        d = int(rng.integers(1, 4))
        V_ = random_unitary(N, rng)
        eps = [random_unitary(d, rng)[0] for _ in range(N)]
        locs = [unitary_with_first_row(e) for e in eps]
        W = compile_setup(SetupSpec.non_polarizing(V_, d, input_locals=locs))
        g = coefficient_tensor(W, species, d, N)
        _, t = permutation_representation(V_, eps, species)
        np.testing.assert_allclose(g.amplitudes, t.amplitudes, atol=1e-10)


def test_rank_bounded_by_combinatorial_bound_on_random_pipelines():
    rng = np.random.default_rng(6)
    for _ in range(100):
        N = int(rng.integers(2, 5))
        d = int(rng.integers(2, 5))
        species = Species.BOSON if rng.integers(2) else Species.FERMION
        g = coefficient_tensor(random_unitary(d * N, rng), species, d, N)
        if g.norm_squared() > 1e-20:
            assert max_bipartite_rank(g)[0] <= combinatorial_bound(N)


def test_bec_input_always_rank_one():
    rng = np.random.default_rng(7)
    for N in (2, 3, 4):
        W = compile_setup(SetupSpec.general(random_unitary(2 * N, rng)[:2], 2, N, input_occupation=(N,)))
        g = coefficient_tensor(W, "boson", 2, N)
        assert max_bipartite_rank(g)[0] == 1


def test_double_occupation_reduces_rank_bound():
    rng = np.random.default_rng(8)
    bound = combinatorial_bound(4, (2, 2))
    assert bound == 6
    for _ in range(20):
        W = compile_setup(SetupSpec.general(random_unitary(8, rng)[:4], 2, 4, input_occupation=(2, 2)))
        g = coefficient_tensor(W, "boson", 2, 4)
        assert max_bipartite_rank(g)[0] <= bound
