"""Localized pair energies of spin configurations on thin lattices.

Energies sum over ordered pairs, so every interacting unordered pair with
different spins contributes twice for a symmetric kernel.  Window membership
is decided on projected coordinates P2(x) with half-open windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import OrientedRect, Rect
from .kernel import DecayMajorant, Kernel, hat_norm
from .lattice import NeighborGraph, ThinLattice, nearest_neighbors

ISING_STATES = np.array([-1.0, 1.0])


@dataclass
class SpinConfig:
    """Labels index into ``states``; ``frozen`` marks boundary-fixed sites."""

    labels: np.ndarray
    states: np.ndarray = field(default_factory=lambda: ISING_STATES.copy())
    frozen: np.ndarray | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.states = np.asarray(self.states, dtype=float)
        if self.frozen is None:
            self.frozen = np.zeros(len(self.labels), dtype=bool)
        self.frozen = np.asarray(self.frozen, dtype=bool)
        if len(self.frozen) != len(self.labels):
            raise ValueError("frozen mask length mismatch")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= len(self.states)):
            raise ValueError("label outside the state set")

    @classmethod
    def ising(cls, spins, frozen=None) -> "SpinConfig":
        s = np.asarray(spins)
        if not np.all(np.isin(s, (-1, 1))):
            raise ValueError("Ising spins must be +-1")
        return cls((s > 0).astype(np.int64), ISING_STATES.copy(), frozen)

    @property
    def values(self) -> np.ndarray:
        return self.states[self.labels]

    @property
    def spins(self) -> np.ndarray:
        """Values as +-1 ints (two-state configurations only)."""
        if len(self.states) != 2 or self.states.ndim != 1:
            raise ValueError("not a two-state configuration")
        return np.where(self.labels == 1, 1, -1).astype(np.int64) if self.states[1] > self.states[0] \
            else np.where(self.labels == 0, 1, -1).astype(np.int64)

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class EnergyBreakdown:
    total: float
    by_offset: dict = field(default_factory=dict)
    pair_count: int = 0
    empty_range: bool = False


def _values(lat: ThinLattice, u) -> np.ndarray:
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    if len(vals) != len(lat.sites):
        raise ValueError(f"configuration has {len(vals)} labels for {len(lat.sites)} sites")
    return vals


def _in_window(window, xy: np.ndarray) -> np.ndarray:
    if window is None:
        return np.ones(len(xy), dtype=bool)
    return window.contains(xy)


def iter_pairs(lat: ThinLattice, kernel: Kernel, window=None, *, anchor: str = "both",
               layer_range: tuple[int, int] | None = None, site_mask: np.ndarray | None = None):
    """Yield (z, xi, yi, w) for ordered interacting pairs, one offset at a time.

    anchor="both" keeps pairs with P2(x), P2(y) in the window; anchor="first"
    keeps pairs with P2(x) in the window and any y.  ``site_mask`` restricts x
    (and y when anchor="both") further.
    """
    s = lat.sites
    inside = _in_window(window, s[:, :2])
    if site_mask is not None:
        inside = inside & site_mask
    if layer_range is not None:
        a, b = layer_range
        inside = inside & (s[:, 2] >= a) & (s[:, 2] <= b)
    xs = np.nonzero(inside)[0]
    for z in kernel.interaction_offsets():
        yi = lat.index_of(s[xs] + np.asarray(z))
        ok = yi >= 0
        xi, yi = xs[ok], yi[ok]
        if anchor == "both":
            keep = inside[yi]
        else:
            keep = np.ones(len(yi), dtype=bool)
            if layer_range is not None:
                keep = (s[yi, 2] >= layer_range[0]) & (s[yi, 2] <= layer_range[1])
        xi, yi = xi[keep], yi[keep]
        w = kernel.pair_weights(z, s[xi, 2], s[yi, 2])
        nz = w > 0
        yield z, xi[nz], yi[nz], w[nz]


def _abs_diff(vals: np.ndarray, xi: np.ndarray, yi: np.ndarray) -> np.ndarray:
    d = vals[xi] - vals[yi]
    return np.abs(d) if d.ndim == 1 else np.linalg.norm(d, axis=1)


def energy(lat: ThinLattice, kernel: Kernel, u, window=None, *, anchor: str = "both",
           layer_range=None, site_mask=None) -> EnergyBreakdown:
    """Sum of c(y - x)|u(x) - u(y)| over ordered pairs localized on ``window``."""
    vals = _values(lat, u)
    by, count, total = {}, 0, 0.0
    for z, xi, yi, w in iter_pairs(lat, kernel, window, anchor=anchor, layer_range=layer_range, site_mask=site_mask):
        e = float(np.sum(w * _abs_diff(vals, xi, yi)))
        by[z] = e
        count += len(xi)
    total = float(sum(by[z] for z in sorted(by)))
    return EnergyBreakdown(total, by, count)


def slice_energy(lat: ThinLattice, kernel: Kernel, u, window, layer_range: tuple[int, int]) -> EnergyBreakdown:
    """Energy with both endpoints' heights restricted to [a, b]; empty ranges give 0 flagged."""
    a, b = layer_range
    if a > b:
        return EnergyBreakdown(0.0, {}, 0, empty_range=True)
    if a < 0 or b > lat.slab_height:
        raise ValueError(f"layer range {layer_range} outside [0, {lat.slab_height}]")
    return energy(lat, kernel, u, window, layer_range=(a, b))


# --------------------------------------------------------------- long to short


def _fatten(window, d: float):
    if isinstance(window, Rect):
        return Rect(window.x0 - d, window.y0 - d, window.x1 + d, window.y1 + d)
    if isinstance(window, OrientedRect):
        return OrientedRect(window.center, window.nu, window.half_nu + d, window.half_perp + d)
    raise TypeError("window must be a Rect or OrientedRect")


def nn_path(points: np.ndarray, tree: cKDTree, i: int, j: int, nn_set: set, adj, offset=None) -> list[int]:
    """Chain of NN sites from i to j following the segment [x_i, x_j].

    The segment is sampled finely with a small generic offset and each sample
    is mapped to its nearest site, i.e. the Voronoi cell it lies in.
    Consecutive cells that are not NN (a thin cell skipped by the sampling)
    are joined by a breadth-first detour in the NN graph.
    """
    x, y = points[i], points[j]
    if offset is None:
        offset = np.array([1.3e-4, 0.7e-4, 0.3e-4])
    k = max(8, int(math.ceil(np.linalg.norm(y - x) * 16)))
    ts = np.linspace(0.0, 1.0, k + 1)[:, None]
    samples = x + ts * (y - x) + offset * np.sin(np.pi * ts)
    _, idx = tree.query(samples)
    chain = [i]
    for c in idx.tolist()[1:] + [j]:
        if c == chain[-1]:
            continue
        if (min(c, chain[-1]), max(c, chain[-1])) not in nn_set:
            chain.extend(_bfs(adj, chain[-1], c)[1:-1])
        chain.append(c)
    return chain


def _bfs(adj, s: int, t: int) -> list[int]:
    prev = {s: s}
    frontier = [s]
    while frontier and t not in prev:
        nxt = []
        for a in frontier:
            for b in adj[a]:
                if b not in prev:
                    prev[b] = a
                    nxt.append(b)
        frontier = nxt
    if t not in prev:
        raise ValueError(f"sites {s} and {t} are not connected in the NN graph")
    path = [t]
    while path[-1] != s:
        path.append(prev[path[-1]])
    return path[::-1]


@dataclass
class LongToShortReport:
    lhs: float
    rhs: float
    C: float
    J_hat: float
    xi_norm: float
    max_multiplicity: int
    nn_energy: float
    paths_inside: bool

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12) + 1e-12


def longtoshort_check(lat: ThinLattice, kernel: Kernel, u, window, xi, *, nn: NeighborGraph | None = None,
                      majorant: DecayMajorant | None = None, c0: float | None = None,
                      R: float | None = None) -> LongToShortReport:
    """Compare the xi-interaction energy with the NN energy on a fattened window.

    lhs = sum over x with x, x + xi in the window of c(xi)|u(x) - u(x + xi)|.
    rhs = C J(|xi_hat|) |xi| sum over ordered NN pairs in B of c0 |du|, with B
    the window fattened by 3(R + M) and C = maxmult / (2 c0 |xi|), maxmult
    being the largest number of xi-paths through a single NN pair.
    """
    vals = _values(lat, u)
    xi = np.asarray(xi, dtype=np.int64)
    s = lat.sites
    pts = s.astype(float)
    nn = nn if nn is not None else nearest_neighbors(lat)
    c0 = kernel.nn_floor if c0 is None else c0
    if not c0 > 0:
        raise ValueError("longtoshort needs a positive NN floor c0")
    R = lat.R_cover if R is None else R
    inside = _in_window(window, s[:, :2])
    xs = np.nonzero(inside)[0]
    ys = lat.index_of(s[xs] + xi)
    ok = ys >= 0
    xs, ys = xs[ok], ys[ok]
    keep = inside[ys]
    xs, ys = xs[keep], ys[keep]
    w = kernel.pair_weights(xi, s[xs, 2], s[ys, 2])
    diff = _abs_diff(vals, xs, ys)
    lhs = float(np.sum(w * diff))

    xi_norm = float(np.linalg.norm(xi))
    r_prime = lat.r_min / math.sqrt(3.0)
    if majorant is not None:
        J = float(majorant(hat_norm(xi, r_prime)))
    else:
        J = float(w.max()) if len(w) else kernel(xi)

    B = _fatten(window, 3.0 * (R + lat.slab_height))
    inB = _in_window(B, s[:, :2])
    nn_set = {(int(a), int(b)) for a, b in nn.pairs.tolist()}
    adj = nn.adjacency()
    tree = cKDTree(pts)
    mult: dict[tuple[int, int], int] = {}
    paths_inside = True
    for a, b, d in zip(xs.tolist(), ys.tolist(), diff.tolist()):
        chain = nn_path(pts, tree, a, b, nn_set, adj)
        used = {(min(p, q), max(p, q)) for p, q in zip(chain[:-1], chain[1:])}
        for e in used:
            mult[e] = mult.get(e, 0) + 1
            if not (inB[e[0]] and inB[e[1]]):
                paths_inside = False
    maxmult = max(mult.values(), default=0)
    pr = nn.pairs
    sel = inB[pr[:, 0]] & inB[pr[:, 1]] if len(pr) else np.zeros(0, bool)
    nn_energy = 2.0 * c0 * float(np.sum(_abs_diff(vals, pr[sel, 0], pr[sel, 1]))) if len(pr) else 0.0
    C = maxmult / (2.0 * c0 * xi_norm) if xi_norm > 0 else 0.0
    rhs = C * J * xi_norm * nn_energy
    return LongToShortReport(lhs, rhs, C, J, xi_norm, maxmult, nn_energy, paths_inside)
