"""Cell-problem surface tensions.

The cell problem on the half-open rotated square Q = Q_nu(c, t) freezes every
site whose projection lies within ``trace_width`` of the boundary of Q to the
two-phase datum (s_i where <x - c, nu> >= 0, s_j otherwise) and minimizes the
energy localized on Q over the remaining sites.  Its value divided by t
estimates the surface tension in direction nu.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .energy import ISING_STATES, SpinConfig, energy
from .geometry import OrientedRect, Rect
from .groundstate import GroundState, build_cut_instance, minimal_minimizer
from .kernel import Kernel
from .lattice import DepositionParams, ThinLattice, generate_deposition, generate_layered
from .parallel import pmap


def primitive(nu) -> tuple[int, int]:
    a, b = (int(v) for v in nu)
    if (a, b) == (0, 0):
        raise ValueError("direction must be nonzero")
    g = math.gcd(a, b)
    return a // g, b // g


@dataclass(frozen=True)
class LatticeSource:
    """Where cell lattices come from: ``layered``, ``deposition`` or ``explicit``."""

    kind: str = "layered"
    M: int = 0
    p: float = 1.0
    lattice: ThinLattice | None = None

    def __post_init__(self):
        if self.kind not in ("layered", "deposition", "explicit"):
            raise ValueError(f"unknown lattice source {self.kind!r}")
        if self.kind == "explicit" and self.lattice is None:
            raise ValueError("explicit source needs a lattice")

    @property
    def random(self) -> bool:
        return self.kind == "deposition" and self.p < 1.0

    def build(self, region: Rect, seed: int | None) -> ThinLattice:
        if self.kind == "layered":
            return generate_layered(self.M, region)
        if self.kind == "deposition":
            return generate_deposition(DepositionParams(self.p, self.M, region, 0 if seed is None else seed))
        return self.lattice

    def label(self) -> str:
        return self.kind


@dataclass(frozen=True)
class CellProblemSpec:
    nu: tuple[int, int]
    t: float
    kernel: Kernel
    source: LatticeSource = field(default_factory=LatticeSource)
    trace_width: float | None = None
    labels: tuple[int, int] = (1, -1)
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "nu", primitive(self.nu))
        w = 2.0 * self.kernel.range_L if self.trace_width is None else float(self.trace_width)
        object.__setattr__(self, "trace_width", w)
        if w < self.kernel.range_L - 1e-12:
            raise ValueError(f"trace width {w} is below the interaction range {self.kernel.range_L}")
        if not self.t > 4 * w:
            raise ValueError(f"t={self.t} must exceed 4 * trace_width = {4 * w}")
        if any(s not in (-1, 1) for s in self.labels):
            raise ValueError("labels must be +-1")

    @property
    def window(self) -> OrientedRect:
        return OrientedRect.cube(self.nu, self.t, self.center)

    def region(self, width: float | None = None) -> Rect:
        w = self.trace_width if width is None else width
        return self.window.int_region(pad=w + self.kernel.range_L)

    def lattice(self, seed: int | None = None, width: float | None = None) -> ThinLattice:
        return self.source.build(self.region(width), seed)


def two_phase_datum(lat: ThinLattice, nu_int, z, labels=(1, -1)) -> np.ndarray:
    """s_i where <P2 x - z, nu> >= 0 and s_j elsewhere, as +-1 spins."""
    nu_int = np.asarray(nu_int, dtype=float)
    side = lat.sites[:, :2] @ nu_int - float(np.dot(z, nu_int))
    return np.where(side >= -1e-9, labels[0], labels[1]).astype(np.int64)


def window_minimum(lat: ThinLattice, kernel: Kernel, window: OrientedRect, nu_int, z, width: float,
                   labels=(1, -1)) -> GroundState:
    """Minimal minimizer of the cell problem on ``window`` with datum through z."""
    spins = two_phase_datum(lat, nu_int, z, labels)
    xy = lat.sites[:, :2]
    inside = window.contains(xy)
    frozen = ~inside | (window.boundary_distance(xy) <= width + 1e-9)
    boundary = SpinConfig.ising(spins, frozen)
    inst = build_cut_instance(lat, kernel, boundary, window, trace_width=width)
    return minimal_minimizer(inst)


@dataclass
class CellResult:
    energy: float
    ground_state: GroundState
    lattice: ThinLattice
    n_free: int = 0


def cell_minimum(spec: CellProblemSpec, seed: int | None = None, lattice: ThinLattice | None = None,
                 width: float | None = None) -> CellResult:
    """Exact cell minimum m(u^{ij}, Q_nu(c, t)) on one lattice realization."""
    w = spec.trace_width if width is None else width
    lat = lattice if lattice is not None else spec.lattice(seed, w)
    gs = window_minimum(lat, spec.kernel, spec.window, spec.nu, spec.center, w, spec.labels)
    return CellResult(gs.energy, gs, lat, int((~gs.config.frozen).sum()))


# ---------------------------------------------------------------- estimates


@dataclass
class TensionEstimate:
    t: float
    per_sample: list
    mean: float
    stderr: float
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, t, samples, meta=None) -> "TensionEstimate":
        vals = np.array([v for _, v in samples], dtype=float)
        mean = float(vals.mean()) if len(vals) else math.nan
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        return cls(float(t), list(samples), mean, se, dict(meta or {}))


@dataclass
class Extrapolation:
    a: float
    b: float
    residuals: list
    ts: list

    @property
    def phi(self) -> float:
        return self.a


def fit_inverse_t(ts, means) -> Extrapolation:
    """Least-squares fit of a + b/t; a single t yields a = mean, b = 0."""
    ts = np.asarray(ts, dtype=float)
    y = np.asarray(means, dtype=float)
    if len(ts) < 2:
        return Extrapolation(float(y[0]), 0.0, [0.0], ts.tolist())
    A = np.stack([np.ones_like(ts), 1.0 / ts], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return Extrapolation(float(coef[0]), float(coef[1]), res.tolist(), ts.tolist())


def _sample(spec: CellProblemSpec, seed):
    t0 = time.perf_counter()
    r = cell_minimum(spec, seed)
    return seed, r.energy / spec.t, time.perf_counter() - t0


def _with_t(spec: CellProblemSpec, t: float) -> CellProblemSpec:
    return CellProblemSpec(spec.nu, t, spec.kernel, spec.source, spec.trace_width, spec.labels, spec.center)


def sample_tension(spec: CellProblemSpec, seeds, threads: int | None = None) -> TensionEstimate:
    seeds = list(seeds) if spec.source.random else [None]
    out = pmap(partial(_sample, spec), seeds, threads)
    est = TensionEstimate.from_samples(spec.t, [(s, v) for s, v, _ in out])
    est.meta["runtime_s"] = [rt for _, _, rt in out]
    return est


def estimate_phi(spec: CellProblemSpec, t_list, seeds, threads: int | None = None):
    """Seed-averaged energy/t per t, plus the a + b/t extrapolation."""
    ests = [sample_tension(_with_t(spec, t), seeds, threads) for t in t_list]
    return ests, fit_inverse_t([e.t for e in ests], [e.mean for e in ests])


# ------------------------------------------------------- trace monotonicity


@dataclass
class MonotonicityReport:
    widths: list
    values: list
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def eta_trace_monotonicity(spec: CellProblemSpec, widths, seed: int | None = None) -> MonotonicityReport:
    """Cell minima for increasing trace widths on one lattice realization."""
    widths = sorted(float(w) for w in widths)
    if widths and widths[0] < spec.kernel.range_L - 1e-12:
        raise ValueError("trace widths must be >= range_L")
    lat = spec.lattice(seed, max(widths))
    vals = [cell_minimum(spec, lattice=lat, width=w).energy for w in widths]
    viol = [(widths[i], widths[i + 1]) for i in range(len(vals) - 1) if vals[i + 1] < vals[i] - 1e-9]
    return MonotonicityReport(widths, vals, viol)


# ------------------------------------------------------------ subadditivity


@dataclass
class SubadditivityReport:
    m_big: float
    m_small: list
    glued_energy: float
    g_line: float
    g_points: float
    g_strip: float
    C_L: float

    @property
    def geom(self) -> float:
        return self.g_line + self.g_points + self.g_strip

    @property
    def excess(self) -> float:
        """E(v) - sum m_n: what the correction terms must absorb."""
        return self.glued_energy - sum(self.m_small)

    @property
    def margin(self) -> float:
        return sum(self.m_small) + self.C_L * self.geom - self.m_big

    @property
    def empirical_constant(self) -> float:
        return self.excess / self.geom if self.geom > 0 else 0.0

    @property
    def holds(self) -> bool:
        return (self.m_big <= self.glued_energy + 1e-9 and self.excess <= self.C_L * self.geom + 1e-9
                and self.margin >= -1e-9)


class HypothesisViolation(ValueError):
    def __init__(self, clause: str, detail: str):
        super().__init__(f"clause ({clause}) fails: {detail}")
        self.clause = clause


def strip_partition(nu, side: float, pieces: int, center=(0.0, 0.0), shift: float = 0.0,
                    inset: float = 0.0) -> list[tuple[np.ndarray, float]]:
    """``pieces`` equal squares in a row along nu-perp, moved by ``shift`` along nu.

    The row spans side - 2 inset, so inset > width keeps it off the frozen band.
    """
    v, w = OrientedRect.cube(nu, 1.0).axes
    rho = (side - 2 * inset) / pieces
    c = np.asarray(center, dtype=float) + shift * v
    return [(c + (-(side - 2 * inset) / 2 + (k + 0.5) * rho) * w, rho) for k in range(pieces)]


def _check_clauses(Q: OrientedRect, cubes, L: float, width: float):
    v, w = Q.axes
    z = np.asarray(Q.center)
    rhos = [r for _, r in cubes]
    rmin = min(rhos)
    if rmin < 4 * L - 1e-9:
        raise HypothesisViolation("i", f"min side {rmin} < 4L = {4 * L}")
    z1 = np.asarray(cubes[0][0])
    for zn, _ in cubes:
        if abs(float(np.dot(np.asarray(zn) - z1, v))) > 1e-9:
            raise HypothesisViolation("ii", "centres are not aligned along nu-perp")
    a1 = float(np.dot(z1 - z, v))
    if abs(a1) > rmin / 4 + 1e-9:
        raise HypothesisViolation("iii", f"dist(z1, z + nu-perp) = {abs(a1)} > {rmin / 4}")
    half = Q.half_nu
    gap = math.inf
    loc = []
    for zn, r in cubes:
        a, b = float(np.dot(np.asarray(zn) - z, v)), float(np.dot(np.asarray(zn) - z, w))
        if abs(a) + r / 2 > half + 1e-9 or abs(b) + r / 2 > half + 1e-9:
            raise HypothesisViolation("iv", f"cube at {tuple(np.round(zn, 6))} leaves Q")
        gap = min(gap, half - abs(a) - r / 2, half - abs(b) - r / 2)
        loc.append((a, b, r))
    for i in range(len(loc)):
        for j in range(i + 1, len(loc)):
            (a, b, r), (c, d, s) = loc[i], loc[j]
            if abs(a - c) < (r + s) / 2 - 1e-9 and abs(b - d) < (r + s) / 2 - 1e-9:
                raise HypothesisViolation("iv", "cubes overlap")
    if not (gap > width or abs(a1) <= 1e-9):
        raise HypothesisViolation("v", f"union is within {gap} <= eta of dQ and z1 - z is not in nu-perp")
    return loc, a1


def _interval_union_length(iv) -> float:
    total, cur = 0.0, None
    for lo, hi in sorted(iv):
        if cur is None or lo > cur[1]:
            if cur is not None:
                total += cur[1] - cur[0]
            cur = [lo, hi]
        else:
            cur[1] = max(cur[1], hi)
    if cur is not None:
        total += cur[1] - cur[0]
    return total


def correction_terms(Q: OrientedRect, loc, a1: float) -> tuple[float, float, float]:
    """Length of the uncovered datum line, crossing points off dQ, perimeter inside the strip."""
    half = Q.half_nu
    covered = [(max(b - r / 2, -half), min(b + r / 2, half)) for a, b, r in loc if abs(a) <= r / 2 + 1e-12]
    g_line = 2 * half - _interval_union_length([c for c in covered if c[1] > c[0]])
    g_points = 0.0
    for a, b, r in loc:
        for e in (b - r / 2, b + r / 2):
            if abs(abs(e) - half) > 1e-9:
                g_points += 1
    lo, hi = min(0.0, a1), max(0.0, a1)
    g_strip = 0.0
    for a, b, r in loc:
        # sides across the strip: two edges parallel to nu
        g_strip += 2 * max(0.0, min(hi, a + r / 2) - max(lo, a - r / 2))
        # edges parallel to nu-perp lying inside the strip
        for e in (a - r / 2, a + r / 2):
            if lo < e < hi:
                g_strip += r
    return g_line, g_points, g_strip


def declared_constant(kernel: Kernel, M: int, states=ISING_STATES) -> float:
    """C_L = 2 D sum_z c(z) (M + 1) (4L + 1)^2 with D the label diameter."""
    D = float(np.ptp(states))
    csum = sum(max(v, kernel.eta or 0.0) if sum(a * a for a in z) == 1 else v for z, v in kernel.table.items())
    if kernel.eta and not kernel.table:
        csum = 6 * kernel.eta
    L = kernel.range_L
    return 2 * D * csum * (M + 1) * (4 * L + 1) ** 2


def subadditivity_audit(nu, Q: OrientedRect, cubes, lat: ThinLattice, kernel: Kernel, width: float | None = None,
                        labels=(1, -1)) -> SubadditivityReport:
    """Check m(Q) <= E(v) and E(v) - sum m(Q_n) <= C_L * (corrections) for the glued v."""
    nu = primitive(nu)
    width = 2 * kernel.range_L if width is None else width
    if width < kernel.range_L - 1e-12:
        raise HypothesisViolation("eta", "trace width below L")
    loc, a1 = _check_clauses(Q, cubes, kernel.range_L, width)
    z = np.asarray(Q.center)
    big = window_minimum(lat, kernel, Q, nu, z, width, labels)
    xy = lat.sites[:, :2]
    glued = two_phase_datum(lat, nu, z, labels)
    m_small = []
    for zn, r in cubes:
        Qn = OrientedRect(tuple(np.asarray(zn, float)), Q.nu, r / 2, r / 2)
        gs = window_minimum(lat, kernel, Qn, nu, zn, width, labels)
        m_small.append(gs.energy)
        sel = Qn.contains(xy)
        glued[sel] = gs.config.spins[sel]
    e_glued = energy(lat, kernel, SpinConfig.ising(glued), Q).total
    g1, g2, g3 = correction_terms(Q, loc, a1)
    return SubadditivityReport(big.energy, m_small, e_glued, g1, g2, g3, declared_constant(kernel, lat.slab_height))
