import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinfilm.energy import SpinConfig, energy, longtoshort_check, slice_energy
from thinfilm.geometry import Rect
from thinfilm.kernel import Kernel
from thinfilm.lattice import DepositionParams, generate_deposition, generate_layered

from instances import random_kernel, random_lattice
from oracles import naive_energy


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2), st.integers(0, 2), st.sampled_from(["both", "first"]))
def test_energy_matches_naive(seed, lk, kk, anchor):
    rng = np.random.default_rng(seed)
    lat = random_lattice(rng, lk)
    k = random_kernel(rng, kk)
    u = rng.choice([-1, 1], lat.n)
    win = Rect(0, 0, 3, 3)
    got = energy(lat, k, u, win, anchor=anchor).total
    ref = naive_energy(lat.sites, k, u, win.contains(lat.sites[:, :2]), anchor)
    assert got == pytest.approx(ref, abs=1e-9)


def test_vector_states_use_euclidean_norm():
    lat = generate_layered(0, Rect(0, 0, 2, 1))
    cfg = SpinConfig(np.array([0, 1]), np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert energy(lat, Kernel.nearest_neighbor(), cfg).total == pytest.approx(2 * np.sqrt(2))


def test_flat_interface_energy():
    lat = generate_layered(2, Rect(0, 0, 4, 4))
    u = np.where(lat.sites[:, 1] < 2, 1, -1)
    e = energy(lat, Kernel.nearest_neighbor(), u)
    # 4 columns x 3 layers of crossing bonds, counted in both orders, |du| = 2
    assert e.total == 4 * 3 * 2 * 2


def test_slice_energy():
    lat = generate_layered(3, Rect(0, 0, 3, 3))
    u = np.where(lat.sites[:, 0] < 1, 1, -1)
    k = Kernel.nearest_neighbor()
    assert slice_energy(lat, k, u, None, (0, 0)).total == 3 * 2 * 2
    assert slice_energy(lat, k, u, None, (0, 3)).total == energy(lat, k, u).total
    empty = slice_energy(lat, k, u, None, (2, 1))
    assert empty.total == 0 and empty.empty_range
    with pytest.raises(ValueError):
        slice_energy(lat, k, u, None, (0, 4))


def test_eta_weights_substrate_bonds():
    lat = generate_layered(1, Rect(0, 0, 2, 1))
    u = np.array([1, 1, -1, -1])
    e = energy(lat, Kernel.nearest_neighbor(1.0, eta=0.25), u).total
    assert e == pytest.approx(2 * 2 * (0.25 + 1.0))


@pytest.mark.parametrize("xi", [(2, 0, 0), (1, 1, 0), (2, 1, 1)])
def test_longtoshort_holds_on_deposition(xi):
    lat = generate_deposition(DepositionParams(0.6, 2, Rect(-4, -4, 12, 12), seed=3))
    rng = np.random.default_rng(1)
    u = np.where(lat.sites[:, 0] + rng.integers(0, 2, lat.n) < 4, 1, -1)
    k = Kernel.ball(3.0, 1.0).with_eta(None)
    k = Kernel(3.0, k.table, nn_floor=1.0)
    rep = longtoshort_check(lat, k, u, Rect(2, 2, 6, 6), xi)
    assert rep.holds and rep.paths_inside
    assert rep.lhs > 0
