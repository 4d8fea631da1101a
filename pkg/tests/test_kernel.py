import json
import math

import numpy as np
import pytest

from thinfilm.kernel import DecayMajorant, Kernel, hat_norm, truncation_bound, validate_hypothesis1


def test_nn_kernel_and_eta():
    k = Kernel.nearest_neighbor(2.0, eta=0.5)
    assert k((1, 0, 0)) == 2.0 and k((1, 1, 0)) == 0.0
    assert k.eval((0, 0, 0), (1, 0, 0)) == 0.5
    assert k.eval((0, 0, 0), (0, 0, 1)) == 0.5
    assert k.eval((0, 0, 1), (1, 0, 1)) == 2.0
    assert k.range_L == 1.0 and k.is_symmetric


def test_range_enforced():
    with pytest.raises(ValueError):
        Kernel(1.0, {(1, 1, 0): 1.0})
    with pytest.raises(ValueError):
        Kernel(2.0, {(1, 0, 0): -1.0})


def test_ball_and_truncation():
    k = Kernel.ball(2.0, lambda z: 1.0 / float(np.linalg.norm(z)))
    assert k((2, 0, 0)) == pytest.approx(0.5)
    assert k((2, 1, 0)) == 0.0
    t = k.truncated(1.5)
    assert t((1, 1, 0)) > 0 and t((2, 0, 0)) == 0.0


def test_json_roundtrip_and_unknown_keys(tmp_path):
    k = Kernel.axial(1.0, 2.0, 3.0, 4.0, eta=0.25)
    back = Kernel.from_json(json.dumps(k.to_json()))
    assert back.table == k.table and back.eta == k.eta
    path = tmp_path / "k.json"
    k.dump(path)
    assert Kernel.load(path).table == k.table
    obj = k.to_json()
    obj["extra"] = 1
    with pytest.raises(ValueError):
        Kernel.from_json(obj)
    assert not k.is_symmetric


def test_hat_norm():
    assert hat_norm((3, 0, 0), 1.0) == pytest.approx(2.0)
    assert hat_norm((1, 1, 0), 2.0) == 0.0
    assert hat_norm((2, 2, 0), 1.0) == pytest.approx(math.sqrt(2))


def test_majorant_and_hypothesis():
    J = DecayMajorant(lambda r: np.exp(-r), integral_bound=20.0, r_max=10.0)
    assert J.is_monotone()
    assert J.radial_integral() == pytest.approx(2 * math.pi * (2.0 - 122.0 * math.exp(-10.0)), rel=1e-6)
    good = Kernel.ball(2.0, lambda z: 0.5 * math.exp(-float(np.linalg.norm(z))))
    assert validate_hypothesis1(good, J).ok
    bad = Kernel.ball(2.0, 5.0)
    assert not validate_hypothesis1(bad, J).ok


def test_truncation_bound_decreases():
    J = DecayMajorant(lambda r: np.exp(-r), integral_bound=20.0, r_max=20.0)
    b = [truncation_bound(J, L) for L in (2, 4, 8)]
    assert b[0] > b[1] > b[2] >= 0
