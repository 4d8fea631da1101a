import itertools
import json
import math
import warnings

import numpy as np
import pytest

from thinfilm.kernel import Kernel
from thinfilm.planelike import (ColumnSet, PeriodicSpin, RationalDirection, certify_planelike, check_birkhoff,
                                check_domain_invariance, check_no_symmetry_breaking, check_translation_energy,
                                fit_width_constant, fundamental_domain, ground_state_audit, infimal_minimizer,
                                interface_width, periodic_energy, quotient_instance, shift_set, unconstrained)
from thinfilm.groundstate import exhaustive_minimum

NN = Kernel.nearest_neighbor()
BALL = Kernel.ball(2.0, 0.25)


def test_direction_basics():
    d = RationalDirection((1, 1))
    assert d.z_generator == (1, -1)
    assert np.dot(d.z_generator, d.nu_int) == 0
    assert d.level(d.w) == 1
    with pytest.warns(UserWarning):
        assert RationalDirection((2, 4)).nu_int == (1, 2)
    with pytest.raises(ValueError):
        RationalDirection((9, 1))


@pytest.mark.parametrize("nu,m", [((0, 1), 1), ((1, 1), 1), ((1, 2), 2), ((3, -2), 3)])
def test_coset_decomposition_exhaustive(nu, m):
    d = RationalDirection(nu)
    F = fundamental_domain(m, d, (0.0, 3.0))
    members = {tuple(p) for p in F.member_sites.tolist()}
    s0, s1 = F.levels
    assert len(members) == (s1 - s0 + 1) * m
    Z = np.array(list(itertools.product(range(-10, 10), repeat=2)))
    z1, z2 = F.decompose(Z)
    assert np.array_equal(z1 + z2, Z)
    assert F.in_mZnu(z1).all()
    band = (d.level(Z) >= s0) & (d.level(Z) <= s1)
    assert all(tuple(p) in members for p in z2[band].tolist())
    # uniqueness: members differ by no element of m Z_nu
    M = np.array(sorted(members))
    diff = (M[:, None, :] - M[None, :, :]).reshape(-1, 2)
    off = ~np.eye(len(M), dtype=bool).ravel()
    assert not F.in_mZnu(diff[off]).any()


def test_example_domain_e2():
    F = fundamental_domain(1, RationalDirection((0, 1)), (0.0, 3.0))
    assert sorted(map(tuple, F.member_sites.tolist())) == [(0, 0), (0, 1), (0, 2), (0, 3)]


def test_flat_interface_m0():
    u = infimal_minimizer(1, RationalDirection((0, 1)), 0.0, 6.0, 0, NN)
    assert u.energy == 4.0
    assert interface_width(u, NN) <= math.sqrt(2)


def test_band_too_narrow_rejected():
    with pytest.raises(ValueError):
        quotient_instance(RationalDirection((0, 1)), 1, 0.2, 0.8, 0, NN)
    with pytest.raises(ValueError):
        quotient_instance(RationalDirection((0, 1)), 1, 2.0, 1.0, 0, NN)


@pytest.mark.parametrize("nu,M,lam,m", [((1, 1), 1, 2.5, 1), ((0, 1), 1, 4.0, 2), ((1, 2), 0, 2.0, 2)])
def test_infimal_matches_exhaustive(nu, M, lam, m):
    d = RationalDirection(nu)
    inst, _ = quotient_instance(d, m, 0.0, lam, M, NN)
    assert inst.n <= 20
    best, _ = exhaustive_minimum(inst)
    u = infimal_minimizer(m, d, 0.0, lam, M, NN)
    assert u.energy == pytest.approx(best)
    # the quotient energy equals the periodic energy summed over a fundamental domain
    s0, s1 = u.levels
    assert periodic_energy(u, d, m, M, NN, (s0 - 5, s1 + 5)) == pytest.approx(u.energy)
    # infimal: no minimizer lies pointwise below
    labs = np.array(list(itertools.product([0, 1], repeat=inst.n)))
    e = inst.evaluate(labs)
    mins = labs[np.abs(e - best) < 1e-9]
    assert np.array_equal(mins.min(axis=0), (u.values.ravel() > 0).astype(int))


def test_label_swap_gives_maximal():
    d = RationalDirection((1, 2))
    lo = infimal_minimizer(2, d, 0.0, 3.0, 1, NN)
    hi = infimal_minimizer(2, d, 0.0, 3.0, 1, NN, which="max")
    assert lo.energy == pytest.approx(hi.energy)
    assert np.all(lo.values <= hi.values)


@pytest.mark.parametrize("nu", [(0, 1), (1, 1), (1, 2), (2, 3)])
@pytest.mark.parametrize("kernel", [NN, BALL, NN.with_eta(0.3)], ids=["nn", "ball", "eta"])
def test_birkhoff_and_no_symmetry_breaking(nu, kernel):
    d = RationalDirection(nu)
    u = infimal_minimizer(1, d, 0.0, 4.0, 2, kernel)
    assert check_birkhoff(u, shift_set(3)).ok
    assert check_no_symmetry_breaking(d, 0.0, 4.0, 2, kernel, (1, 2, 3, 4)).ok


def test_birkhoff_negative_control():
    d = RationalDirection((0, 1))
    u = infimal_minimizer(2, d, 0.0, 4.0, 0, NN)
    vals = u.values.copy()
    vals[1, 0, 0], vals[3, 0, 0] = -1, 1  # admissible, not a minimizer
    bad = PeriodicSpin(d, 2, 0.0, 4.0, 0, vals)
    rep = check_birkhoff(bad, shift_set(3))
    assert not rep.ok and rep.violations


def test_translation_energy_invariance():
    for nu in [(0, 1), (1, 2)]:
        d = RationalDirection(nu)
        u = infimal_minimizer(2, d, 0.0, 3.0, 1, BALL)
        assert check_translation_energy(u, BALL, shift_set(3)).ok


def test_domain_choice_invariance():
    for nu in [(1, 1), (1, 2), (2, 3)]:
        assert check_domain_invariance(RationalDirection(nu), 0.0, 4.0, 1, NN, m=2).ok


def test_ground_state_audit_negative_control():
    d = RationalDirection((0, 1))
    u = infimal_minimizer(1, d, 0.0, 6.0, 1, NN)
    vals = u.values.copy()
    vals[vals.shape[0] // 2:] = -1
    vals[2, 0, 1] = 1  # an isolated defect in the -1 phase
    bad = PeriodicSpin(d, 1, 0.0, 6.0, 1, vals)
    gamma = ColumnSet((a, b) for a in range(-4, 5) for b in range(-2, 6))
    assert ground_state_audit(bad, 1, NN, gamma).improvement > 0
    assert ground_state_audit(u, 1, NN, gamma).improvement <= 1e-9


@pytest.mark.parametrize("nu", [(0, 1), (1, 2)])
def test_certify_planelike(nu):
    d = RationalDirection(nu)
    u, w, cert = certify_planelike(d, 2, NN, n_audits=4)
    assert unconstrained(u)
    assert w <= 8 * 3
    assert all(x["is_minimizer"] for x in cert.widened)
    assert all(x["same"] for x in cert.same_as_wider)
    assert cert.max_improvement <= 1e-9
    obj = json.loads(cert.to_json())
    assert len(obj["subwindow_audits"]) == 4
    assert "dump" not in obj
    text = u.dump_text()
    assert text.startswith("# planelike") and "# layer 2" in text


def test_fit_width_constant():
    fit = fit_width_constant([1, 2, 4], [2.0, 3.0, 5.0])
    assert fit["C"] == pytest.approx((4 + 9 + 25) / (4 + 9 + 25))
    assert not fit["superlinear"]
    assert fit_width_constant([1, 2, 4], [1.0, 3.0, 10.0])["superlinear"]


def test_non_primitive_warning_is_single():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        RationalDirection((3, 3))
    assert len(rec) == 1
