"""Thin lattices: generation, admissibility, nearest neighbours, projection.

All sites have integer coordinates and live in the slab R^2 x [0, M].  A
generation region is a half-open integer rectangle ``Rect(x0, y0, x1, y1)``
of columns (i1, i2) with x0 <= i1 < x1 and y0 <= i2 < y1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from .geometry import Rect, ccw, clip_halfplane, intersect_convex, polygon_area
from .rng import RNG_NAME, uniforms

FACE_TOL = 1e-9


def _check_region(region: Rect) -> Rect:
    if not isinstance(region, Rect):
        region = Rect(*region)
    for v in (region.x0, region.y0, region.x1, region.y1):
        if v != int(v):
            raise ValueError(f"region must have integer corners, got {region}")
    return Rect(int(region.x0), int(region.y0), int(region.x1), int(region.y1))


@dataclass(frozen=True)
class DepositionParams:
    p: float
    M: int
    region: Rect
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if self.M < 0:
            raise ValueError(f"M must be >= 0, got {self.M}")
        object.__setattr__(self, "region", _check_region(self.region))
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(eq=False)
class ThinLattice:
    """Finite integer point set in a slab, sorted lexicographically."""

    sites: np.ndarray
    slab_height: int
    region: Rect | None = None
    r_min: float = 1.0
    R_cover: float = 1.0
    generator: str = "explicit"
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=np.int64).reshape(-1, 3)
        order = np.lexsort((s[:, 2], s[:, 1], s[:, 0]))
        self.sites = np.ascontiguousarray(s[order])
        if len(s) and (s[:, 2].min() < 0 or s[:, 2].max() > self.slab_height):
            raise ValueError("site outside the slab R^2 x [0, M]")
        self._grid = None

    @classmethod
    def from_sites(cls, sites, M: int | None = None, **kw) -> "ThinLattice":
        s = np.asarray(sites, dtype=np.int64).reshape(-1, 3)
        if M is None:
            M = int(s[:, 2].max()) if len(s) else 0
        return cls(s, M, **kw)

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def xy(self) -> np.ndarray:
        return self.sites[:, :2]

    @property
    def columns(self) -> dict[tuple[int, int], list[int]]:
        out: dict[tuple[int, int], list[int]] = {}
        for i1, i2, i3 in self.sites.tolist():
            out.setdefault((i1, i2), []).append(i3)
        return out

    def _build_grid(self):
        s = self.sites
        lo = s.min(axis=0) if len(s) else np.zeros(3, np.int64)
        hi = s.max(axis=0) if len(s) else np.zeros(3, np.int64)
        shape = tuple((hi - lo + 1).tolist())
        grid = np.full(shape, -1, dtype=np.int64)
        if len(s):
            grid[tuple((s - lo).T)] = np.arange(len(s))
        self._grid = (lo, hi, grid)

    def index_of(self, pts) -> np.ndarray:
        """Site indices of integer points, -1 where absent."""
        if self._grid is None:
            self._build_grid()
        lo, hi, grid = self._grid
        p = np.asarray(pts, dtype=np.int64)
        flat = p.reshape(-1, 3)
        out = np.full(len(flat), -1, dtype=np.int64)
        ok = np.all((flat >= lo) & (flat <= hi), axis=1)
        if ok.any():
            out[ok] = grid[tuple((flat[ok] - lo).T)]
        return out.reshape(p.shape[:-1])

    def contains(self, pts) -> np.ndarray:
        return self.index_of(pts) >= 0

    def column_heights(self) -> dict[tuple[int, int], int]:
        return {k: max(v) for k, v in self.columns.items()}

    def serialize(self) -> str:
        if self.region is None:
            reg = "none"
        else:
            reg = f"{int(self.region.x0)},{int(self.region.y0)},{int(self.region.x1)},{int(self.region.y1)}"
        seed = "none" if self.seed is None else str(self.seed)
        lines = [f"# thinlattice M={self.slab_height} region={reg} seed={seed} generator={self.generator}"]
        lines += [f"{a} {b} {c}" for a, b, c in self.sites.tolist()]
        return "\n".join(lines) + "\n"

    @classmethod
    def deserialize(cls, text: str) -> "ThinLattice":
        rows = text.strip().splitlines()
        head = dict(tok.split("=", 1) for tok in rows[0].lstrip("# ").split()[1:])
        region = None if head["region"] == "none" else Rect(*map(int, head["region"].split(",")))
        seed = None if head["seed"] == "none" else int(head["seed"])
        sites = np.array([list(map(int, r.split())) for r in rows[1:]], dtype=np.int64).reshape(-1, 3)
        return cls(sites, int(head["M"]), region=region, generator=head["generator"], seed=seed)


def deposition_heights(params: DepositionParams) -> np.ndarray:
    """Column heights h(i1, i2) = #{k in 1..M : u(seed, i1, i2, k) < p}, shape (nx, ny)."""
    reg = params.region
    i1 = np.arange(reg.x0, reg.x1, dtype=np.int64)
    i2 = np.arange(reg.y0, reg.y1, dtype=np.int64)
    h = np.zeros((len(i1), len(i2)), dtype=np.int64)
    for k in range(1, params.M + 1):
        u = uniforms(params.seed, i1[:, None], i2[None, :], k)
        h += u < params.p
    return h


def _columns_to_sites(region: Rect, heights: np.ndarray) -> np.ndarray:
    i1 = np.arange(region.x0, region.x1, dtype=np.int64)
    i2 = np.arange(region.y0, region.y1, dtype=np.int64)
    g1, g2 = np.meshgrid(i1, i2, indexing="ij")
    counts = (heights + 1).ravel()
    c1 = np.repeat(g1.ravel(), counts)
    c2 = np.repeat(g2.ravel(), counts)
    start = np.repeat(np.cumsum(counts) - counts, counts)
    i3 = np.arange(counts.sum(), dtype=np.int64) - start
    return np.stack([c1, c2, i3], axis=1)


def generate_deposition(params: DepositionParams) -> ThinLattice:
    h = deposition_heights(params)
    sites = _columns_to_sites(params.region, h)
    return ThinLattice(
        sites, params.M, region=params.region, r_min=1.0, R_cover=1.0,
        generator=f"deposition/{RNG_NAME}", seed=params.seed,
        params={"p": params.p, "M": params.M},
    )


def generate_layered(M: int, region: Rect) -> ThinLattice:
    if M < 0:
        raise ValueError("M must be >= 0")
    region = _check_region(region)
    h = np.full((int(region.x1 - region.x0), int(region.y1 - region.y0)), M, dtype=np.int64)
    return ThinLattice(_columns_to_sites(region, h), M, region=region, generator="layered", params={"M": M})


# ---------------------------------------------------------------- admissibility


@dataclass
class AdmissibilityReport:
    ok: bool
    spacing_ok: bool
    covering_ok: bool
    min_distance: float
    max_probe_distance: float
    failing_pair: tuple | None = None
    uncovered_probe: tuple | None = None
    n_probes: int = 0


def validate_admissibility(lat: ThinLattice, r: float, R: float, *, region: Rect | None = None,
                           probe_heights=None, pitch: float | None = None) -> AdmissibilityReport:
    """Check min spacing r and covering radius R on a probe grid (pitch <= R/4).

    Probes fill ``region x probe_heights``; heights default to a grid over
    [0, M].  Passing ``probe_heights=[0]`` measures covering against the
    substrate plane only.
    """
    s = lat.sites.astype(float)
    tree = cKDTree(s)
    failing = None
    dmin = math.inf
    if len(s) >= 2:
        d, j = tree.query(s, k=2)
        dmin = float(d[:, 1].min())
        bad = np.nonzero(d[:, 1] < r - 1e-12)[0]
        if len(bad):
            i = int(bad[0])
            a, b = sorted([i, int(j[i, 1])])
            failing = (tuple(lat.sites[a].tolist()), tuple(lat.sites[b].tolist()))

    pitch = R / 4.0 if pitch is None else min(pitch, R / 4.0)
    reg = region or lat.region
    if reg is None:
        lo, hi = lat.sites[:, :2].min(axis=0), lat.sites[:, :2].max(axis=0) + 1
        reg = Rect(lo[0], lo[1], hi[0], hi[1])
    # probes span the closed hull of the region's columns
    xs = np.linspace(reg.x0, reg.x1 - 1, max(2, int(math.ceil((reg.x1 - 1 - reg.x0) / pitch)) + 1))
    ys = np.linspace(reg.y0, reg.y1 - 1, max(2, int(math.ceil((reg.y1 - 1 - reg.y0) / pitch)) + 1))
    if probe_heights is None:
        M = lat.slab_height
        zs = np.linspace(0, M, max(1, int(math.ceil(M / pitch)) + 1)) if M > 0 else np.zeros(1)
    else:
        zs = np.asarray(probe_heights, dtype=float)
    probes = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    dist, _ = tree.query(probes)
    worst = int(np.argmax(dist))
    covering_ok = bool(dist[worst] <= R + 1e-12)
    return AdmissibilityReport(
        ok=failing is None and covering_ok,
        spacing_ok=failing is None,
        covering_ok=covering_ok,
        min_distance=dmin,
        max_probe_distance=float(dist[worst]),
        failing_pair=failing,
        uncovered_probe=None if covering_ok else tuple(probes[worst].tolist()),
        n_probes=len(probes),
    )


# ---------------------------------------------------------- nearest neighbours


@dataclass
class NeighborGraph:
    """Voronoi-face pairs as index pairs (i < j) into ``lat.sites``."""

    pairs: np.ndarray
    face_areas: np.ndarray
    sites: np.ndarray

    def pair_set(self) -> set[tuple[tuple[int, ...], tuple[int, ...]]]:
        out = set()
        for i, j in self.pairs.tolist():
            a, b = tuple(self.sites[i].tolist()), tuple(self.sites[j].tolist())
            out.add((a, b))
            out.add((b, a))
        return out

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(len(self.sites))]
        for i, j in self.pairs.tolist():
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def area(self, a, b) -> float:
        key = {tuple(map(int, a)), tuple(map(int, b))}
        for (i, j), ar in zip(self.pairs.tolist(), self.face_areas.tolist()):
            if {tuple(self.sites[i].tolist()), tuple(self.sites[j].tolist())} == key:
                return ar
        return 0.0


def slab_half_height(M: int) -> int:
    return 2 * max(M, 1)


def _plane_frame(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def _initial_face(x, y, bounds) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Bisector plane of (x, y) clipped to the truncation box, in plane coordinates."""
    m = 0.5 * (x + y)
    n = (y - x) / np.linalg.norm(y - x)
    e1, e2 = _plane_frame(n)
    lo, hi = bounds
    big = float(np.linalg.norm(hi - lo)) + 1.0
    poly = np.array([[-big, -big], [big, -big], [big, big], [-big, big]])
    basis = np.stack([e1, e2], axis=1)  # 3 x 2
    for k in range(3):
        # lo_k <= m_k + basis_k . w <= hi_k
        poly = clip_halfplane(poly, basis[k], hi[k] - m[k])
        poly = clip_halfplane(poly, -basis[k], m[k] - lo[k])
    return poly, m, e1, e2


def _clip_by(poly, m, e1, e2, x, comps):
    # |z - x| <= |z - c|  <=>  2 z.(c - x) <= |c|^2 - |x|^2
    for c in comps:
        d = c - x
        rhs = 0.5 * (c @ c - x @ x) - m @ d
        poly = clip_halfplane(poly, np.array([e1 @ d, e2 @ d]), rhs)
        if len(poly) == 0:
            break
    return poly


def voronoi_face(points: np.ndarray, tree: cKDTree, i: int, j: int, bounds, k0: int = 24) -> np.ndarray:
    """Exact shared face of truncated cells i and j (polygon in the bisector frame).

    Competitors are gathered adaptively: a site c can cut the current face only
    if |c - m| < max_v(|v - x| + |v - m|) over face vertices v, so the loop
    stops once that ball adds nothing new.
    """
    x, y = points[i], points[j]
    poly, m, e1, e2 = _initial_face(x, y, bounds)
    seen = {i, j}
    _, near = tree.query(m, k=min(k0, len(points)))
    batch = [int(c) for c in np.atleast_1d(near) if int(c) not in seen]
    while batch:
        seen.update(batch)
        poly = _clip_by(poly, m, e1, e2, x, points[batch])
        if len(poly) == 0:
            return poly
        v3 = m + poly[:, :1] * e1 + poly[:, 1:] * e2
        rho = float(np.max(np.linalg.norm(v3 - x, axis=1) + np.linalg.norm(v3 - m, axis=1)))
        batch = [c for c in tree.query_ball_point(m, rho) if c not in seen]
        batch.sort()
    return poly


def _truncation_bounds(sites: np.ndarray, M: int):
    h = slab_half_height(M)
    lo = sites.min(axis=0).astype(float) - 1.0
    hi = sites.max(axis=0).astype(float) + 1.0
    lo[2], hi[2] = -h, h
    return lo, hi


def candidate_pairs(sites: np.ndarray) -> np.ndarray:
    """Superset of Voronoi-face pairs from a Delaunay triangulation."""
    n = len(sites)
    if n < 2:
        return np.zeros((0, 2), dtype=np.int64)
    pts = sites.astype(float)
    dims = [k for k in range(3) if np.ptp(pts[:, k]) > 0]
    edges = set()
    try:
        if len(dims) < 2 or n <= len(dims) + 1:
            raise QhullError("degenerate")
        tri = Delaunay(pts[:, dims])
        for simplex in tri.simplices:
            s = sorted(simplex.tolist())
            for a in range(len(s)):
                for b in range(a + 1, len(s)):
                    edges.add((s[a], s[b]))
        # Qhull may drop coplanar points; pair those with everything nearby
        missing = set(range(n)) - set(np.unique(tri.simplices).tolist())
        if missing:
            tree = cKDTree(pts)
            for a in sorted(missing):
                for b in tree.query_ball_point(pts[a], 3.0):
                    if a != b:
                        edges.add((min(a, b), max(a, b)))
    except (QhullError, ValueError):
        edges = {(a, b) for a in range(n) for b in range(a + 1, n)}
    return np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)


def nearest_neighbors(lat: ThinLattice, cutoff: float | None = None, tol: float = FACE_TOL,
                      candidates: np.ndarray | None = None) -> NeighborGraph:
    """Pairs whose truncated Voronoi cells share a face of area > tol.

    Cells are truncated to |x3| <= 2 max(M, 1) and, horizontally, to the
    lattice bounding box padded by one unit.  ``cutoff`` drops candidate pairs
    farther apart than it; it never changes the competitor set.
    """
    sites = lat.sites
    pts = sites.astype(float)
    cand = candidate_pairs(sites) if candidates is None else np.asarray(candidates, dtype=np.int64).reshape(-1, 2)
    if cutoff is not None and len(cand):
        d = np.linalg.norm(pts[cand[:, 0]] - pts[cand[:, 1]], axis=1)
        cand = cand[d <= cutoff + 1e-12]
    if len(pts) == 0:
        return NeighborGraph(np.zeros((0, 2), np.int64), np.zeros(0), sites)
    tree = cKDTree(pts)
    bounds = _truncation_bounds(sites, lat.slab_height)
    keep, areas = [], []
    for i, j in cand.tolist():
        a = polygon_area(voronoi_face(pts, tree, i, j, bounds))
        if a > tol:
            keep.append((i, j))
            areas.append(a)
    return NeighborGraph(np.array(keep, dtype=np.int64).reshape(-1, 2), np.array(areas), sites)


# ----------------------------------------------------------------- projection


@dataclass
class ProjectedField:
    """Column averages on projected points with their 2-D Voronoi cells."""

    points: np.ndarray
    values: np.ndarray
    counts: np.ndarray

    def cells(self, window: Rect) -> list[np.ndarray]:
        """Voronoi cells of the projected points clipped to ``window``."""
        return voronoi_cells_2d(self.points, window.polygon())

    def value_at(self, xy) -> np.ndarray:
        _, j = cKDTree(self.points).query(np.asarray(xy, dtype=float))
        return self.values[j]


def voronoi_cells_2d(points: np.ndarray, clip: np.ndarray) -> list[np.ndarray]:
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    nbrs: list[set[int]] = [set() for _ in range(n)]
    try:
        if n < 4:
            raise QhullError("small")
        tri = Delaunay(pts)
        for s in tri.simplices.tolist():
            for a in s:
                nbrs[a].update(b for b in s if b != a)
        if any(not nb for nb in nbrs):
            raise QhullError("dropped points")
    except (QhullError, ValueError):
        nbrs = [set(range(n)) - {a} for a in range(n)]
    out = []
    base = ccw(np.asarray(clip, dtype=float))
    for a in range(n):
        poly = base
        x = pts[a]
        for b in sorted(nbrs[a]):
            d = pts[b] - x
            poly = clip_halfplane(poly, d, 0.5 * (pts[b] @ pts[b] - x @ x))
            if len(poly) == 0:
                break
        out.append(poly)
    return out


def project_and_average(lat: ThinLattice, u) -> ProjectedField:
    """Mean of u over each column P2^{-1}(z), one value per projected point."""
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    if len(vals) != len(lat.sites):
        raise ValueError("configuration length does not match the lattice")
    xy = lat.sites[:, :2]
    keys, inv, counts = np.unique(xy, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    if vals.ndim == 1:
        sums = np.bincount(inv, weights=vals, minlength=len(keys))
        means = sums / counts
    else:
        means = np.stack([np.bincount(inv, weights=vals[:, k], minlength=len(keys)) for k in range(vals.shape[1])], 1)
        means = means / counts[:, None]
    return ProjectedField(keys.astype(float), means, counts)


def l1_distance(f: ProjectedField, g: ProjectedField, window: Rect) -> float:
    """Integral of |f - g| over ``window`` by exact overlay of the cell polygons."""
    cf, cg = f.cells(window), g.cells(window)
    boxes_g = [(p[:, 0].min(), p[:, 1].min(), p[:, 0].max(), p[:, 1].max()) if len(p) else None for p in cg]
    total = 0.0
    for a, pa in enumerate(cf):
        if len(pa) < 3:
            continue
        ax0, ay0, ax1, ay1 = pa[:, 0].min(), pa[:, 1].min(), pa[:, 0].max(), pa[:, 1].max()
        for b, pb in enumerate(cg):
            bb = boxes_g[b]
            if bb is None or bb[0] >= ax1 or bb[2] <= ax0 or bb[1] >= ay1 or bb[3] <= ay0:
                continue
            diff = np.linalg.norm(np.atleast_1d(f.values[a] - g.values[b]))
            if diff == 0.0:
                continue
            total += diff * polygon_area(intersect_convex(ccw(pa), ccw(pb)))
    return float(total)
