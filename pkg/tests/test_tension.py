import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinfilm.geometry import OrientedRect
from thinfilm.kernel import Kernel
from thinfilm.lattice import DepositionParams, generate_deposition
from thinfilm.tension import (CellProblemSpec, HypothesisViolation, LatticeSource, cell_minimum,
                              eta_trace_monotonicity, fit_inverse_t, primitive, sample_tension, strip_partition,
                              subadditivity_audit)

NN = Kernel.nearest_neighbor()


def test_primitive():
    assert primitive((2, 4)) == (1, 2)
    assert primitive((0, -3)) == (0, -1)
    with pytest.raises(ValueError):
        primitive((0, 0))


def test_spec_validation():
    with pytest.raises(ValueError):
        CellProblemSpec((0, 1), 8, NN)  # t must exceed 4 * 2L
    with pytest.raises(ValueError):
        CellProblemSpec((0, 1), 32, Kernel.ball(2.0), trace_width=1.0)
    with pytest.raises(ValueError):
        LatticeSource("bogus")


@pytest.mark.parametrize("M", [0, 1, 3])
def test_layered_flat_cut(M):
    spec = CellProblemSpec((0, 1), 16, NN, LatticeSource("layered", M))
    assert cell_minimum(spec).energy / 16 == 4.0 * (M + 1)


def test_diagonal_within_8_over_t():
    spec = CellProblemSpec((1, 1), 32, NN)
    val = cell_minimum(spec).energy / 32
    assert abs(val - 4 * math.sqrt(2)) <= 8 / 32


def test_label_order_is_symmetric():
    a = CellProblemSpec((1, 2), 24, NN, LatticeSource("deposition", 2, 0.5))
    b = CellProblemSpec((1, 2), 24, NN, LatticeSource("deposition", 2, 0.5), labels=(-1, 1))
    assert cell_minimum(a, seed=3).energy == cell_minimum(b, seed=3).energy


def test_fit_inverse_t_exact():
    ts = [16, 32, 64]
    fit = fit_inverse_t(ts, [3.0 + 5.0 / t for t in ts])
    assert fit.a == pytest.approx(3.0) and fit.b == pytest.approx(5.0)
    assert max(abs(r) for r in fit.residuals) < 1e-12
    one = fit_inverse_t([16], [2.5])
    assert one.a == 2.5 and one.b == 0.0


def test_sample_tension_parallel_matches_serial():
    spec = CellProblemSpec((0, 1), 16, NN, LatticeSource("deposition", 2, 0.5))
    a = sample_tension(spec, range(4), threads=1)
    b = sample_tension(spec, range(4), threads=2)
    assert a.per_sample == b.per_sample
    assert a.stderr > 0


@settings(max_examples=8)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(0, 1), (1, 1), (1, 2)]))
def test_trace_width_monotone(seed, nu):
    spec = CellProblemSpec(nu, 20, NN, LatticeSource("deposition", 1, 0.5), trace_width=3.0)
    rep = eta_trace_monotonicity(spec, [1.0, 2.0, 3.0], seed)
    assert rep.ok, rep


def _audit(nu, seed, pieces, shift, side=32.0, M=1, width=2.0):
    Q = OrientedRect.cube(nu, side)
    cubes = strip_partition(nu, side, pieces, shift=shift, inset=width + 1)
    lat = generate_deposition(DepositionParams(0.5, M, Q.int_region(pad=width + 1), seed))
    return subadditivity_audit(nu, Q, cubes, lat, NN, width)


@settings(max_examples=6)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(0, 1), (1, 1)]), st.integers(1, 3),
       st.floats(-0.9, 0.9))  # inset - width = 1 bounds the shift
def test_subadditivity_holds(seed, nu, pieces, shift):
    rep = _audit(nu, seed, pieces, shift)
    assert rep.holds, rep
    assert rep.empirical_constant <= rep.C_L


def test_subadditivity_clause_violations():
    nu = (0, 1)
    Q = OrientedRect.cube(nu, 32.0)
    lat = generate_deposition(DepositionParams(0.5, 1, Q.int_region(pad=3), 0))
    with pytest.raises(HypothesisViolation) as e:
        subadditivity_audit(nu, Q, [(np.zeros(2), 3.0)], lat, NN, 2.0)
    assert e.value.clause == "i"
    with pytest.raises(HypothesisViolation) as e:
        subadditivity_audit(nu, Q, [(np.array([0.0, 0.0]), 8.0), (np.array([8.0, 1.0]), 8.0)], lat, NN, 2.0)
    assert e.value.clause == "ii"
    with pytest.raises(HypothesisViolation) as e:
        subadditivity_audit(nu, Q, [(np.array([0.0, 3.0]), 8.0)], lat, NN, 2.0)
    assert e.value.clause == "iii"
    with pytest.raises(HypothesisViolation) as e:
        subadditivity_audit(nu, Q, [(np.array([13.0, 0.0]), 8.0)], lat, NN, 2.0)
    assert e.value.clause == "iv"
