"""Exact ground states with frozen boundaries.

Two-state energies reduce to an s-t cut: label 1 (the upper state, +1) is
the source side.  A free node pays ``source_tie`` when it takes label 0 and
``sink_tie`` when it takes label 1; a free pair pays ``weight`` when its
labels differ.  For +-1 spins the pair weight is 2(c(z) + c(-z)), the sum of
both ordered contributions.

Capacities are made integral with the denominator D = lcm(2^20, q) where q
is the common denominator of the weights read as short rationals, so the
cut is exact for every rational kernel table.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .energy import ISING_STATES, SpinConfig, iter_pairs
from .geometry import Rect
from .kernel import Kernel
from .lattice import ThinLattice
from .maxflow import CapacityOverflowError, max_flow

BASE_SCALE = 2**20
MAX_DENOMINATOR = 10**6
EXHAUSTIVE_CAP = 2**22
VOLUME_EXHAUSTIVE_FREE = 24

__all__ = [
    "CapacityOverflowError", "CutInstance", "GroundState", "PottsInstance",
    "build_cut_instance", "build_potts_instance", "solve_mincut", "minimal_minimizer",
    "maximal_minimizer", "solve_multistate", "solve_volume_constrained", "estimate_density",
    "restriction_audit",
]


@dataclass
class PottsInstance:
    """Energy offset + sum_v unary[v, l_v] + sum_pairs coupling * |s_la - s_lb|."""

    states: np.ndarray
    unary: np.ndarray          # (n, q)
    pair_a: np.ndarray
    pair_b: np.ndarray
    coupling: np.ndarray       # c(b - a) + c(a - b), both ordered pairs
    offset: float = 0.0
    free_sites: np.ndarray | None = None
    base: SpinConfig | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.unary)

    @property
    def q(self) -> int:
        return len(self.states)

    def _dist(self) -> np.ndarray:
        s = self.states.reshape(len(self.states), -1)
        return np.linalg.norm(s[:, None, :] - s[None, :, :], axis=2)

    def evaluate(self, labels: np.ndarray) -> np.ndarray:
        """Energies for one (n,) or many (k, n) label vectors."""
        lab = np.atleast_2d(np.asarray(labels, dtype=np.int64))
        e = np.full(len(lab), self.offset)
        if self.n:
            e = e + self.unary[np.arange(self.n)[None, :], lab].sum(axis=1)
        if len(self.pair_a):
            d = self._dist()
            e = e + (self.coupling[None, :] * d[lab[:, self.pair_a], lab[:, self.pair_b]]).sum(axis=1)
        return e if np.ndim(labels) == 2 else e[:1]

    def to_config(self, labels) -> SpinConfig:
        if self.base is None or self.free_sites is None:
            return SpinConfig(np.asarray(labels, dtype=np.int64), self.states)
        lab = self.base.labels.copy()
        lab[self.free_sites] = labels
        return SpinConfig(lab, self.states, self.base.frozen.copy())


@dataclass
class CutInstance(PottsInstance):
    """Two-state instance; weight = coupling * |s1 - s0|."""

    @property
    def source_ties(self) -> np.ndarray:
        return self.unary[:, 0]

    @property
    def sink_ties(self) -> np.ndarray:
        return self.unary[:, 1]

    @property
    def weights(self) -> np.ndarray:
        return self.coupling * abs(float(self.states[1] - self.states[0]))


@dataclass
class GroundState:
    config: SpinConfig
    energy: float
    minimal_flag: bool = False
    labels: np.ndarray | None = None
    approximate: bool = False
    cut_value: int | None = None
    scale: int | None = None


def build_potts_instance(lat: ThinLattice, kernel: Kernel, boundary: SpinConfig, window=None, *,
                         trace_width: float | None = None, anchor: str = "both",
                         free_mask: np.ndarray | None = None) -> PottsInstance:
    """Reduce the localized energy to unary and pair terms over the free sites.

    Free sites are the window sites not marked frozen in ``boundary`` (and in
    ``free_mask`` when given).  With anchor="first" the energy counts x in the
    window against every y, and sites outside the window act as frozen.
    """
    if len(boundary.labels) != len(lat.sites):
        raise ValueError("boundary configuration does not cover the lattice")
    xy = lat.sites[:, :2]
    inside = np.ones(len(xy), bool) if window is None else window.contains(xy)
    if trace_width is not None and window is not None:
        band = inside & (window.boundary_distance(xy) <= trace_width + 1e-9)
        loose = band & ~boundary.frozen
        if loose.any():
            i = int(np.nonzero(loose)[0][0])
            raise ValueError(f"site {tuple(lat.sites[i].tolist())} lies within the trace width but is not frozen")
    free = inside & ~boundary.frozen
    if free_mask is not None:
        free &= free_mask
    free_sites = np.nonzero(free)[0]
    node = np.full(len(xy), -1, dtype=np.int64)
    node[free_sites] = np.arange(len(free_sites))
    states = boundary.states
    q = len(states)
    st = states.reshape(q, -1)
    vals = boundary.values.reshape(len(xy), -1)
    unary = np.zeros((len(free_sites), q))
    pa, pb, pw = [], [], []
    offset = 0.0
    for z, xi, yi, w in iter_pairs(lat, kernel, window, anchor=anchor):
        fx, fy = node[xi] >= 0, node[yi] >= 0
        both = fx & fy
        if both.any():
            a, b = node[xi[both]], node[yi[both]]
            pa.append(np.minimum(a, b))
            pb.append(np.maximum(a, b))
            pw.append(w[both])
        for mine, other, sel in ((xi, yi, fx & ~fy), (yi, xi, fy & ~fx)):
            if sel.any():
                d = np.linalg.norm(st[None, :, :] - vals[other[sel]][:, None, :], axis=2)
                np.add.at(unary, node[mine[sel]], w[sel, None] * d)
        ff = ~fx & ~fy
        if ff.any():
            offset += float(np.sum(w[ff] * np.linalg.norm(vals[xi[ff]] - vals[yi[ff]], axis=1)))
    if pa:
        a, b, w = np.concatenate(pa), np.concatenate(pb), np.concatenate(pw)
        key = a * max(len(free_sites), 1) + b
        uk, inv = np.unique(key, return_inverse=True)
        coup = np.bincount(inv.ravel(), weights=w)
        a = uk // max(len(free_sites), 1)
        b = uk % max(len(free_sites), 1)
    else:
        a = b = np.zeros(0, np.int64)
        coup = np.zeros(0)
    cls = CutInstance if q == 2 and states.ndim == 1 else PottsInstance
    return cls(states.copy(), unary, a.astype(np.int64), b.astype(np.int64), coup, offset,
               free_sites, boundary, {"anchor": anchor})


def build_cut_instance(lat: ThinLattice, kernel: Kernel, boundary: SpinConfig, window=None, **kw) -> CutInstance:
    if len(boundary.states) != 2 or boundary.states.ndim != 1:
        raise ValueError("cut instances need exactly two scalar states")
    if boundary.states[1] < boundary.states[0]:
        raise ValueError("states must be ordered s0 < s1")
    return build_potts_instance(lat, kernel, boundary, window, **kw)


def cut_instance_from_arrays(source_ties, sink_ties, pair_a, pair_b, weights, offset=0.0) -> CutInstance:
    """Instance over +-1 spins given directly by ties and pair weights."""
    src = np.asarray(source_ties, dtype=float)
    snk = np.asarray(sink_ties, dtype=float)
    unary = np.stack([src, snk], axis=1) if len(src) else np.zeros((0, 2))
    return CutInstance(ISING_STATES.copy(), unary, np.asarray(pair_a, np.int64), np.asarray(pair_b, np.int64),
                       np.asarray(weights, dtype=float) / 2.0, float(offset))


def capacity_scale(values) -> int:
    """lcm(2^20, common denominator of the values read as rationals)."""
    den = 1
    for v in np.unique(np.asarray(values, dtype=float)):
        if v == 0:
            continue
        f = Fraction(float(v)).limit_denominator(MAX_DENOMINATOR)
        if abs(float(f) - v) > 1e-12 * max(1.0, abs(v)):
            raise ValueError(f"weight {v!r} is not a short rational; exact cuts need rational weights")
        den = den * f.denominator // math.gcd(den, f.denominator)
    return BASE_SCALE * den // math.gcd(BASE_SCALE, den)


def _to_int(values: np.ndarray, scale: int) -> np.ndarray:
    x = np.asarray(values, dtype=float) * scale
    out = np.rint(x)
    if np.any(np.abs(x - out) > 1e-6 * np.maximum(1.0, np.abs(x))):
        raise ValueError("capacity not integral at the chosen scale")
    if out.size and out.max() > 2**62:
        raise CapacityOverflowError(int(out.max()), float(out.max()) / 2**62)
    return out.astype(np.int64)


def _solve_cut(inst: CutInstance, which: str):
    n = inst.n
    w = inst.weights
    src, snk = inst.source_ties, inst.sink_ties
    # the constant min(src, snk) per node does not affect the argmin
    base = np.minimum(src, snk)
    src_r, snk_r = src - base, snk - base
    scale = capacity_scale(np.concatenate([w, src_r, snk_r]))
    S, T = n, n + 1
    nodes = np.arange(n)
    use_s = src_r > 0
    use_t = snk_r > 0
    tails = np.concatenate([inst.pair_a, np.full(use_s.sum(), S), nodes[use_t]])
    heads = np.concatenate([inst.pair_b, nodes[use_s], np.full(use_t.sum(), T)])
    cf = np.concatenate([_to_int(w, scale), _to_int(src_r[use_s], scale), _to_int(snk_r[use_t], scale)])
    cr = np.concatenate([_to_int(w, scale), np.zeros(use_s.sum() + use_t.sum(), np.int64)])
    res = max_flow(n + 2, tails, heads, cf, cr, S, T)
    side = res.source_side_min if which == "min" else res.source_side_max
    labels = side[:n].astype(np.int64)
    return labels, res.value, scale


def solve_mincut(inst: CutInstance, *, which: str = "min") -> GroundState:
    """Exact minimizer; ``which`` selects the minimal or maximal one."""
    if not isinstance(inst, CutInstance):
        raise TypeError("solve_mincut needs a two-state CutInstance")
    if inst.n == 0:
        return GroundState(inst.to_config(np.zeros(0, np.int64)), float(inst.offset), True,
                           np.zeros(0, np.int64), cut_value=0, scale=BASE_SCALE)
    labels, value, scale = _solve_cut(inst, which)
    e = float(inst.evaluate(labels)[0])
    return GroundState(inst.to_config(labels), e, which == "min", labels, cut_value=value, scale=scale)


def minimal_minimizer(inst: CutInstance) -> GroundState:
    """Pointwise-minimal minimizer: +1 exactly on the residual source component."""
    return solve_mincut(inst, which="min")


def maximal_minimizer(inst: CutInstance) -> GroundState:
    gs = solve_mincut(inst, which="max")
    gs.minimal_flag = False
    return gs


# ------------------------------------------------------------- multi-state


def _enumerate_labels(n: int, q: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(idx), n), dtype=np.int64)
    for k in range(n):
        out[:, k] = idx % q
        idx //= q
    return out


def exhaustive_minimum(inst: PottsInstance, *, chunk: int = 1 << 16, mask_fn=None):
    """Brute-force minimum over all q^n labelings (optionally filtered)."""
    n, q = inst.n, inst.q
    total = q**n
    best, best_lab = math.inf, None
    for s in range(0, total, chunk):
        lab = _enumerate_labels(n, q, s, min(total, s + chunk))
        if mask_fn is not None:
            lab = lab[mask_fn(lab)]
            if not len(lab):
                continue
        e = inst.evaluate(lab) if n else np.full(len(lab), inst.offset)
        k = int(np.argmin(e))
        if e[k] < best - 1e-12:
            best, best_lab = float(e[k]), lab[k].copy()
    return best, best_lab


def _icm(inst: PottsInstance, labels: np.ndarray, max_sweeps: int = 100) -> np.ndarray:
    d = inst._dist()
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(inst.n)]
    for a, b, c in zip(inst.pair_a.tolist(), inst.pair_b.tolist(), inst.coupling.tolist()):
        nbrs[a].append((b, c))
        nbrs[b].append((a, c))
    lab = labels.copy()
    for _ in range(max_sweeps):
        changed = False
        for v in range(inst.n):
            cost = inst.unary[v].copy()
            for w, c in nbrs[v]:
                cost += c * d[:, lab[w]]
            k = int(np.argmin(cost))
            if cost[k] < cost[lab[v]] - 1e-12:
                lab[v] = k
                changed = True
        if not changed:
            break
    return lab


def solve_multistate(inst: PottsInstance, *, allow_approximate: bool = False) -> GroundState:
    """Exhaustive minimum when q^n <= 2^22; otherwise ICM flagged approximate."""
    if inst.q > 4:
        raise ValueError("multi-state solver supports q <= 4")
    if inst.q**inst.n <= EXHAUSTIVE_CAP:
        e, lab = exhaustive_minimum(inst)
        lab = np.zeros(0, np.int64) if lab is None else lab
        return GroundState(inst.to_config(lab), e, False, lab)
    if not allow_approximate:
        raise ValueError(f"q^n = {inst.q}^{inst.n} exceeds the exhaustive cap; pass allow_approximate=True")
    lab = _icm(inst, np.argmin(inst.unary, axis=1))
    return GroundState(inst.to_config(lab), float(inst.evaluate(lab)[0]), False, lab, approximate=True)


# -------------------------------------------------------- volume constraint


def solve_volume_constrained(inst: PottsInstance, counts, *, allow_approximate: bool = True,
                             seed: int = 0) -> GroundState:
    """Minimum subject to exact label counts over the free sites.

    Frozen sites keep their labels, so ``counts`` refers to the free sites;
    with no frozen sites this is the count over the whole window.

    Two-state instances with at most 24 free sites are solved exactly by
    enumerating every admissible +1-set; q-state instances within the
    exhaustive cap are filtered exhaustively; anything larger uses swap
    local search and is flagged approximate.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if len(counts) != inst.q or counts.min() < 0 or counts.sum() != inst.n:
        raise ValueError(f"infeasible counts {counts.tolist()} for {inst.n} free sites")
    n = inst.n
    if inst.q == 2 and n <= VOLUME_EXHAUSTIVE_FREE:
        k = int(counts[1])
        best, best_lab = math.inf, None
        combos = itertools.combinations(range(n), k)
        chunk = 1 << 15
        while True:
            block = list(itertools.islice(combos, chunk))
            if not block:
                break
            lab = np.zeros((len(block), n), dtype=np.int64)
            if k:
                rows = np.repeat(np.arange(len(block)), k)
                lab[rows, np.array(block, dtype=np.int64).ravel()] = 1
            e = inst.evaluate(lab)
            j = int(np.argmin(e))
            if e[j] < best - 1e-12:
                best, best_lab = float(e[j]), lab[j].copy()
        return GroundState(inst.to_config(best_lab), best, False, best_lab)
    if inst.q**n <= EXHAUSTIVE_CAP:
        e, lab = exhaustive_minimum(
            inst, mask_fn=lambda L: np.all(np.stack([(L == s).sum(1) for s in range(inst.q)], 1) == counts, axis=1))
        return GroundState(inst.to_config(lab), e, False, lab)
    if not allow_approximate:
        raise ValueError("instance exceeds the exact volume-constrained cap")
    lab = _swap_search(inst, counts, seed)
    return GroundState(inst.to_config(lab), float(inst.evaluate(lab)[0]), False, lab, approximate=True)


def _swap_search(inst: PottsInstance, counts: np.ndarray, seed: int, rounds: int = 50) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lab = np.repeat(np.arange(inst.q), counts)
    lab = lab[rng.permutation(len(lab))]
    e = float(inst.evaluate(lab)[0])
    for _ in range(rounds):
        improved = False
        for a in range(inst.n):
            for b in range(a + 1, inst.n):
                if lab[a] == lab[b]:
                    continue
                lab[a], lab[b] = lab[b], lab[a]
                e2 = float(inst.evaluate(lab)[0])
                if e2 < e - 1e-12:
                    e, improved = e2, True
                else:
                    lab[a], lab[b] = lab[b], lab[a]
        if not improved:
            break
    return lab


# ------------------------------------------------------------------ density


@dataclass
class DensityEstimate:
    gamma0: float
    stderr: float
    areas: np.ndarray
    per_window: np.ndarray  # (n_lattices, n_windows) points per area


def estimate_density(lattices, windows: list[Rect]) -> DensityEstimate:
    """Points per unit area of P2(L) counted with multiplicity, extrapolated.

    Each lattice's sequence is fit by a + b * perimeter/area over the nested
    windows; gamma0 is the mean of the intercepts a over lattices.
    """
    if isinstance(lattices, ThinLattice):
        lattices = [lattices]
    areas = np.array([w.area for w in windows])
    per = np.zeros((len(lattices), len(windows)))
    for i, lat in enumerate(lattices):
        xy = lat.sites[:, :2]
        for j, w in enumerate(windows):
            per[i, j] = np.count_nonzero(w.contains(xy)) / w.area
    ratio = np.array([2 * ((w.x1 - w.x0) + (w.y1 - w.y0)) / w.area for w in windows])
    if len(windows) >= 2 and np.ptp(ratio) > 0:
        A = np.stack([np.ones_like(ratio), ratio], 1)
        coef = np.linalg.lstsq(A, per.T, rcond=None)[0]
        a = coef[0]
    else:
        a = per[:, -1]
    stderr = float(np.std(a, ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
    return DensityEstimate(float(np.mean(a)), stderr, areas, per)


# -------------------------------------------------------------- restriction


@dataclass
class RestrictionAudit:
    window: tuple
    energy_before: float
    energy_after: float

    @property
    def improvement(self) -> float:
        return self.energy_before - self.energy_after


def restriction_audit(lat: ThinLattice, kernel: Kernel, config: SpinConfig, window, *,
                      energy_window=None, anchor: str = "both") -> RestrictionAudit:
    """Re-solve on ``window`` with everything else frozen to ``config``.

    The energy is the one ``config`` was minimized for (localized on
    ``energy_window``, whole lattice by default), so any decrease means
    ``config`` was not a ground state there.
    """
    xy = lat.sites[:, :2]
    inside = window.contains(xy)
    boundary = SpinConfig(config.labels.copy(), config.states, config.frozen | ~inside)
    inst = build_cut_instance(lat, kernel, boundary, energy_window, anchor=anchor)
    before = float(inst.evaluate(config.labels[inst.free_sites])[0]) if inst.n else inst.offset
    gs = solve_mincut(inst)
    key = window.__dict__ if hasattr(window, "__dict__") else {}
    return RestrictionAudit(tuple(key.values()), before, gs.energy)
