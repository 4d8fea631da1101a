import math

import numpy as np
import pytest

from thinfilm.energy import energy
from thinfilm.geometry import Rect
from thinfilm.kernel import Kernel
from thinfilm.lattice import ThinLattice, generate_layered
from thinfilm.experiments import (PercolationRegime, find_vacant_path, largeM_limit, linear_law, percolation_regime,
                                  phi1_limit, phi_slice, separating_configuration, slice_crosscheck, trend_toward,
                                  vacant_path_certificate, vacant_rectangle)

NN = Kernel.nearest_neighbor()


@pytest.mark.parametrize("nu,val", [((0, 1), 4.0), ((1, 0), 4.0), ((1, 1), 4 * math.sqrt(2)),
                                    ((1, 2), 12 / math.sqrt(5))])
def test_phi_slice_closed_form(nu, val):
    assert phi_slice(nu, NN) == pytest.approx(val)


def test_phi_slice_axial():
    k = Kernel.axial(1.0, 3.0, 0.5, 0.5)
    assert phi_slice((1, 0), k) == pytest.approx(8.0)
    assert phi_slice((0, 1), k) == pytest.approx(2.0)


@pytest.mark.parametrize("nu", [(0, 1), (1, 1), (1, 2)])
def test_slice_crosscheck_within_8_over_t(nu):
    exact, num = slice_crosscheck(nu, NN, 32)
    assert abs(num - exact) <= 8 / 32 + 1e-12


def test_phi1_layered_and_superadditive():
    res = phi1_limit(NN, [0, 1, 3], t=16)
    assert res.phi == [4.0, 8.0, 16.0]
    assert res.per_layer == [4.0, 4.0, 4.0]
    assert res.superadditive and len(res.superadditivity) == 2


def test_trend_toward():
    assert trend_toward([5.0, 4.5, 4.2], [0.05] * 3, 4.0)["monotone_trending"]
    assert not trend_toward([4.2, 4.5, 5.0], [0.01] * 3, 4.0)["monotone_trending"]
    # noise-sized overshoot is tolerated
    assert trend_toward([4.3, 4.1, 4.12], [0.02] * 3, 4.0)["monotone_trending"]


def test_linear_law_small():
    res = linear_law(0.7, [2, 4], (0, 1), NN, range(3), t=16)
    assert res.target == 4.0
    assert len(res.ratios) == 2 and all(r > 0 for r in res.ratios)
    with pytest.raises(ValueError):
        linear_law(0.0, [2], (0, 1), NN, range(2))


def test_percolation_regime_flags():
    assert PercolationRegime(0.1, 1).percolating
    assert not PercolationRegime(0.9, 3).percolating
    assert PercolationRegime(0.5, 2).q == pytest.approx(0.25)
    res = percolation_regime(0.1, 1, [0.1, 0.01], (0, 1), NN, range(2), t=16, control=(0.9, 3))
    assert res.values == [0.1, 0.01]
    assert res.extra["control"]["phi"] > 0
    assert math.isfinite(res.fit["ratio_spread"])


def test_vacant_rectangle():
    assert vacant_rectangle(64) == (-30, -8, 30, 8)
    assert vacant_rectangle(16) == (-6, -4, 6, 4)


def _slab_with_wall(n=9):
    """M = 1 slab on [-n, n]^2 with every column full except the row y = 0."""
    reg = Rect(-n, -n, n + 1, n + 1)
    sites = [s for s in generate_layered(1, reg).sites.tolist() if not (s[1] == 0 and s[2] == 1)]
    return ThinLattice.from_sites(sites, 1, region=reg)


def test_vacant_path_found_and_separates():
    lat = _slab_with_wall()
    box = (-5, -3, 5, 3)
    path = find_vacant_path(lat, box=box)
    assert path is not None and all(b == 0 for _, b in path)
    u = separating_configuration(lat, path, box)
    win = Rect(-5, -3, 6, 4)
    assert energy(lat, NN.with_eta(0.0), u, win).total == 0.0
    assert energy(lat, NN.with_eta(0.5), u, win).total > 0.0
    full = generate_layered(1, Rect(-9, -9, 10, 10))
    assert find_vacant_path(full, box=box) is None


def test_vacant_certificate_low_density():
    cert = vacant_path_certificate(0.1, 1, 16, seed=0)
    assert cert.found and cert.certified
    none = vacant_path_certificate(0.95, 3, 16, seed=0)
    assert not none.found and not none.certified


def test_large_m_small():
    res = largeM_limit(0.5, [1.0, 0.5], [4], (0, 1), NN, range(3), t=16)
    assert res.target == pytest.approx(2.0)
    assert len(res.ratios) == 2 and "eta_agreement" in res.fit
