import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinfilm.geometry import Rect
from thinfilm.lattice import (DepositionParams, ThinLattice, generate_deposition, generate_layered, l1_distance,
                              nearest_neighbors, project_and_average, validate_admissibility)

from oracles import brute_nn, mc_l1

UNIT = {(1, 0, 0), (0, 1, 0), (0, 0, 1)}


def _pairs(graph):
    return {p for p in graph.pair_set() if p[0] < p[1]}


def _unit_pairs(sites):
    S = {tuple(s) for s in sites.tolist()}
    out = set()
    for s in S:
        for d in UNIT:
            t = tuple(a + b for a, b in zip(s, d))
            if t in S:
                out.add((s, t))
    return out


def test_deposition_params_validation():
    with pytest.raises(ValueError):
        DepositionParams(0.0, 3, Rect(0, 0, 2, 2))
    with pytest.raises(ValueError):
        DepositionParams(0.5, -1, Rect(0, 0, 2, 2))


def test_deposition_structure_and_mean():
    lat = generate_deposition(DepositionParams(0.3, 6, Rect(0, 0, 40, 40), seed=5))
    heights = np.array(list(lat.column_heights().values()))
    assert len(heights) == 1600
    assert abs(heights.mean() - 1.8) < 0.1
    # columns are contiguous stacks on the substrate
    for col in list(lat.columns.values())[:200]:
        assert col == list(range(len(col)))
    assert np.all(lat.sites[:, 2] <= 6)


def test_p_one_gives_full_slab():
    reg = Rect(0, 0, 5, 5)
    a = generate_deposition(DepositionParams(1.0, 3, reg, seed=9))
    b = generate_layered(3, reg)
    assert np.array_equal(a.sites, b.sites)


def test_serialize_roundtrip():
    lat = generate_deposition(DepositionParams(0.5, 3, Rect(-2, -2, 3, 4), seed=2))
    back = ThinLattice.deserialize(lat.serialize())
    assert np.array_equal(back.sites, lat.sites)
    assert back.slab_height == 3 and back.seed == 2 and back.region == lat.region
    assert back.serialize() == lat.serialize()


def test_index_of_and_contains():
    lat = generate_layered(1, Rect(0, 0, 3, 3))
    idx = lat.index_of(np.array([[0, 0, 0], [2, 2, 1], [3, 0, 0], [0, 0, 2]]))
    assert idx[0] == 0 and idx[1] == lat.n - 1 and idx[2] == -1 and idx[3] == -1


def test_admissibility_layered_and_vacancy():
    lat = generate_layered(2, Rect(0, 0, 6, 6))
    rep = validate_admissibility(lat, 1.0, 1.0)
    assert rep.ok and rep.min_distance == 1.0
    sites = [s for s in lat.sites.tolist() if s != [3, 3, 1]]
    holed = ThinLattice.from_sites(sites, 2, region=lat.region)
    # Z^3 has covering radius sqrt(3)/2; a vacancy pushes it to about 1
    assert validate_admissibility(lat, 1.0, 0.87).covering_ok
    assert not validate_admissibility(holed, 1.0, 0.87).covering_ok
    dup = ThinLattice.from_sites(lat.sites.tolist() + [[0, 0, 0]], 2)
    assert validate_admissibility(dup, 1.0, 1.0).failing_pair is not None


@pytest.mark.parametrize("shape", [(2, 2, 0), (3, 2, 1), (4, 4, 2), (5, 3, 3)])
def test_nn_full_slab_is_unit_pairs(shape):
    nx, ny, M = shape
    lat = generate_layered(M, Rect(0, 0, nx, ny))
    got = _pairs(nearest_neighbors(lat))
    assert got == _unit_pairs(lat.sites)


def test_vacancy_counterexample():
    lat = generate_layered(1, Rect(-2, -2, 3, 3))
    sites = [s for s in lat.sites.tolist() if s != [0, 0, 1]]
    holed = ThinLattice.from_sites(sites, 1)
    pairs = _pairs(nearest_neighbors(holed))
    assert ((-1, 0, 1), (1, 0, 1)) not in pairs
    assert brute_nn(holed.sites, 1) == pairs


def test_two_points():
    lat = ThinLattice.from_sites([[0, 0, 0], [5, 0, 0]], 0)
    assert _pairs(nearest_neighbors(lat)) == {((0, 0, 0), (5, 0, 0))}


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.floats(0.2, 0.9), st.integers(1, 3))
def test_nn_matches_lp_oracle(seed, p, M):
    lat = generate_deposition(DepositionParams(p, M, Rect(0, 0, 3, 3), seed=seed))
    assert _pairs(nearest_neighbors(lat)) == brute_nn(lat.sites, M)


def test_projection_averages_columns():
    lat = generate_layered(2, Rect(0, 0, 2, 1))
    u = np.array([1, 1, -1, -1, -1, -1])
    f = project_and_average(lat, u)
    assert f.counts.tolist() == [3, 3]
    assert np.allclose(f.values, [1 / 3, -1])


def test_l1_distance_against_sobol():
    rng = np.random.default_rng(0)
    a = generate_deposition(DepositionParams(0.5, 2, Rect(0, 0, 6, 6), seed=1))
    b = generate_deposition(DepositionParams(0.5, 2, Rect(0, 0, 6, 6), seed=2))
    fa = project_and_average(a, rng.choice([-1, 1], a.n))
    fb = project_and_average(b, rng.choice([-1, 1], b.n))
    # shift one field off the integer grid so cells genuinely overlap
    fb.points = fb.points + np.array([0.3, 0.45])
    win = Rect(0.5, 0.5, 5.0, 5.0)
    exact = l1_distance(fa, fb, win)
    est, se = mc_l1(fa, fb, win)
    assert abs(exact - est) <= 5 * se + 1e-3
    assert l1_distance(fa, fa, win) == 0.0


def test_layered_generation_counts():
    for M, (nx, ny) in itertools.product([0, 2], [(1, 1), (3, 4)]):
        assert generate_layered(M, Rect(0, 0, nx, ny)).n == nx * ny * (M + 1)
