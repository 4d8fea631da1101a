"""Deposition-film experiments: slice tension, layered limit, linear law,
percolation regime with a weak substrate, and the large-M limit."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .energy import SpinConfig, energy
from .geometry import Rect
from .kernel import Kernel
from .lattice import DepositionParams, ThinLattice, generate_deposition
from .tension import CellProblemSpec, LatticeSource, cell_minimum, sample_tension

P_SITE = 0.592746


def unit(nu) -> np.ndarray:
    v = np.asarray(nu, dtype=float)
    return v / np.hypot(*v)


def phi_slice(nu, kernel: Kernel) -> float:
    """2(c(e1) + c(-e1))|nu1| + 2(c(e2) + c(-e2))|nu2| for NN kernels.

    Kernels with longer in-plane range fall back to a single-layer cell
    minimum at t = 64.
    """
    planar = [z for z in kernel.table if z[2] == 0]
    if any(abs(z[0]) + abs(z[1]) > 1 for z in planar):
        return slice_crosscheck(nu, kernel, 64)[1]
    v = unit(nu)
    c = kernel
    return 2 * (c((1, 0, 0)) + c((-1, 0, 0))) * abs(v[0]) + 2 * (c((0, 1, 0)) + c((0, -1, 0))) * abs(v[1])


def slice_crosscheck(nu, kernel: Kernel, t: float) -> tuple[float, float]:
    """(closed form, single-layer cell minimum / t) for the eta-free kernel."""
    k = kernel.with_eta(None)
    spec = CellProblemSpec(nu, t, k, LatticeSource("layered", 0))
    numeric = cell_minimum(spec).energy / t
    planar = [z for z in k.table if z[2] == 0]
    closed = math.nan if any(abs(z[0]) + abs(z[1]) > 1 for z in planar) else phi_slice(nu, k)
    return closed, numeric


@dataclass
class SweepResult:
    axis: str
    values: list
    estimates: list
    ratios: list
    ratio_stderr: list
    target: float | None = None
    fit: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for v, e, r, s in zip(self.values, self.estimates, self.ratios, self.ratio_stderr):
            out.append({self.axis: v, "phi": e.mean, "phi_stderr": e.stderr, "ratio": r, "ratio_stderr": s,
                        "target": self.target})
        return out


# ------------------------------------------------------------------ layered


@dataclass
class Phi1Result:
    M_list: list
    phi: list
    per_layer: list
    superadditivity: list  # (M, M', phi(M+M'+1), phi(M) + phi(M'), ok)
    t: float

    @property
    def limit(self) -> float:
        return self.per_layer[-1]

    @property
    def superadditive(self) -> bool:
        return all(ok for *_, ok in self.superadditivity)


def phi1_limit(kernel: Kernel, M_list, nu=(0, 1), t: float = 32, labels=(1, -1), tol: float = 1e-9) -> Phi1Result:
    """phi^{1,M} = cell minimum / t on layered slabs, with superadditivity pairs.

    Every pair (M, M') whose sum M + M' + 1 is also scheduled is audited.
    """
    M_list = sorted(set(int(m) for m in M_list))
    phi = {}
    for M in M_list:
        spec = CellProblemSpec(nu, t, kernel, LatticeSource("layered", M), labels=labels)
        phi[M] = cell_minimum(spec).energy / t
    sup = []
    for i, a in enumerate(M_list):
        for b in M_list[i:]:
            c = a + b + 1
            if c in phi:
                sup.append((a, b, phi[c], phi[a] + phi[b], phi[c] >= phi[a] + phi[b] - tol))
    return Phi1Result(M_list, [phi[m] for m in M_list], [phi[m] / (m + 1) for m in M_list], sup, t)


# --------------------------------------------------------------- linear law


def _sweep(p: float, M_list, nu, kernel: Kernel, seeds, t: float, threads, norm) -> tuple[list, list, list]:
    ests, ratios, ses = [], [], []
    for M in M_list:
        spec = CellProblemSpec(nu, t, kernel, LatticeSource("deposition", int(M), p))
        e = sample_tension(spec, seeds, threads)
        d = norm(M)
        ests.append(e)
        ratios.append(e.mean / d)
        ses.append(e.stderr / d)
    return ests, ratios, ses


def trend_toward(ratios, ses, target: float, k: float = 2.0) -> dict:
    """Gaps |ratio - target| must not grow between consecutive M by more than
    k combined standard errors, and the last gap must not exceed the first
    by more than that either."""
    gaps = [abs(r - target) for r in ratios]
    steps = []
    ok = True
    for i in range(len(gaps) - 1):
        slack = k * math.hypot(ses[i], ses[i + 1])
        good = gaps[i + 1] <= gaps[i] + slack
        steps.append((gaps[i], gaps[i + 1], slack, good))
        ok &= good
    if len(gaps) >= 2:
        ok &= gaps[-1] <= gaps[0] + k * math.hypot(ses[0], ses[-1])
    return {"gaps": gaps, "steps": steps, "monotone_trending": bool(ok)}


def linear_law(p: float, M_list, nu, kernel: Kernel, seeds, t: float = 48, threads=None) -> SweepResult:
    """phi_hat^p(M) / (pM) per M against phi^1(nu) from the layered problem."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    M_list = [int(m) for m in M_list]
    ests, ratios, ses = _sweep(p, M_list, nu, kernel, seeds, t, threads, lambda M: p * M)
    ph1 = phi1_limit(kernel, [max(M_list)], nu, t)
    target = ph1.limit
    res = SweepResult("M", M_list, ests, ratios, ses, target)
    res.fit = trend_toward(ratios, ses, target)
    res.extra = {"p": p, "t": t, "phi1_M": max(M_list)}
    return res


# ------------------------------------------------------------- percolation


@dataclass
class PercolationRegime:
    p: float
    M: int
    p_site: float = P_SITE

    @property
    def q(self) -> float:
        return (1.0 - self.p) ** self.M

    @property
    def percolating(self) -> bool:
        return self.q > self.p_site


def percolation_regime(p: float, M: int, eta_list, nu, kernel: Kernel, seeds, t: float = 64,
                       p_site: float = P_SITE, control: tuple[float, int] | None = None, threads=None) -> SweepResult:
    """phi_hat^{p,eta}(M) per eta and the ratios phi_hat / eta."""
    eta_list = sorted((float(e) for e in eta_list), reverse=True)
    ests, ratios, ses = [], [], []
    for eta in eta_list:
        spec = CellProblemSpec(nu, t, kernel.with_eta(eta), LatticeSource("deposition", M, p))
        e = sample_tension(spec, seeds, threads)
        ests.append(e)
        ratios.append(e.mean / eta if eta > 0 else math.inf)
        ses.append(e.stderr / eta if eta > 0 else math.inf)
    regime = PercolationRegime(p, M, p_site)
    finite = [r for r in ratios if math.isfinite(r)]
    spread = max(finite) / min(finite) if finite and min(finite) > 0 else math.inf
    res = SweepResult("eta", eta_list, ests, ratios, ses, None)
    res.fit = {"ratio_spread": spread}
    res.extra = {"p": p, "M": M, "q": regime.q, "p_site": p_site, "percolating": regime.percolating, "t": t}
    if control is not None:
        pc, Mc = control
        spec = CellProblemSpec(nu, t, kernel.with_eta(min(eta_list)), LatticeSource("deposition", Mc, pc))
        ce = sample_tension(spec, seeds, threads)
        res.extra["control"] = {"p": pc, "M": Mc, "q": PercolationRegime(pc, Mc, p_site).q,
                                "eta": min(eta_list), "phi": ce.mean, "stderr": ce.stderr}
    return res


def vacant_rectangle(N: int) -> tuple[int, int, int, int]:
    """R_N = [-floor(N/2) + 2, floor(N/2) - 2] x [-ceil(sqrt N), ceil(sqrt N)] (closed, in columns)."""
    h = math.isqrt(N - 1) + 1 if N > 1 else 1
    return -(N // 2) + 2, -h, N // 2 - 2, h


def _height_grid(lat: ThinLattice, box) -> np.ndarray:
    x0, y0, x1, y1 = box
    H = np.full((x1 - x0 + 1, y1 - y0 + 1), -1, dtype=np.int64)
    s = lat.sites
    sel = (s[:, 0] >= x0) & (s[:, 0] <= x1) & (s[:, 1] >= y0) & (s[:, 1] <= y1)
    np.maximum.at(H, (s[sel, 0] - x0, s[sel, 1] - y0), s[sel, 2])
    if (H < 0).any():
        raise ValueError("lattice does not cover the rectangle")
    return H


def find_vacant_path(lat: ThinLattice, N: int | None = None, box=None) -> list[tuple[int, int]] | None:
    """Shortest 4-connected left-right crossing of R_N through height-0 columns."""
    box = vacant_rectangle(N) if box is None else box
    x0, y0, x1, y1 = box
    vacant = _height_grid(lat, box) == 0
    nx, ny = vacant.shape
    prev = {}
    dq = deque()
    for j in range(ny):
        if vacant[0, j]:
            prev[(0, j)] = None
            dq.append((0, j))
    end = None
    while dq:
        a, b = dq.popleft()
        if a == nx - 1:
            end = (a, b)
            break
        for da, db in ((1, 0), (0, 1), (0, -1), (-1, 0)):
            c, d = a + da, b + db
            if 0 <= c < nx and 0 <= d < ny and vacant[c, d] and (c, d) not in prev:
                prev[(c, d)] = (a, b)
                dq.append((c, d))
    if end is None:
        return None
    path = [end]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return [(a + x0, b + y0) for a, b in reversed(path)]


def separating_configuration(lat: ThinLattice, path, box) -> SpinConfig:
    """+1 on columns 4-connected to the top row of the box avoiding the path, -1 elsewhere."""
    x0, y0, x1, y1 = box
    nx, ny = x1 - x0 + 1, y1 - y0 + 1
    blocked = np.zeros((nx, ny), bool)
    for a, b in path:
        blocked[a - x0, b - y0] = True
    top = np.zeros((nx, ny), bool)
    dq = deque((a, ny - 1) for a in range(nx) if not blocked[a, ny - 1])
    for a, b in dq:
        top[a, b] = True
    while dq:
        a, b = dq.popleft()
        for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            c, d = a + da, b + db
            if 0 <= c < nx and 0 <= d < ny and not blocked[c, d] and not top[c, d]:
                top[c, d] = True
                dq.append((c, d))
    s = lat.sites
    ins = (s[:, 0] >= x0) & (s[:, 0] <= x1) & (s[:, 1] >= y0) & (s[:, 1] <= y1)
    spins = -np.ones(len(s), dtype=np.int64)
    spins[ins] = np.where(top[s[ins, 0] - x0, s[ins, 1] - y0], 1, -1)
    return SpinConfig.ising(spins)


@dataclass
class VacantPathCertificate:
    seed: int
    path: list | None
    deposited_energy: float | None
    substrate_energy: float | None

    @property
    def found(self) -> bool:
        return self.path is not None

    @property
    def certified(self) -> bool:
        return self.found and self.deposited_energy == 0.0


def vacant_path_certificate(p: float, M: int, N: int, seed: int, kernel: Kernel | None = None,
                            eta: float = 0.0) -> VacantPathCertificate:
    """Path search on a fresh deposition lattice and the energy of u_N on R_N.

    ``deposited_energy`` drops every substrate-touching unit bond (eta = 0);
    ``substrate_energy`` is the remaining eta-weighted part.
    """
    box = vacant_rectangle(N)
    region = Rect(box[0] - 1, box[1] - 1, box[2] + 2, box[3] + 2)
    lat = generate_deposition(DepositionParams(p, M, region, seed))
    path = find_vacant_path(lat, box=box)
    if path is None:
        return VacantPathCertificate(seed, None, None, None)
    u = separating_configuration(lat, path, box)
    base = kernel or Kernel.nearest_neighbor()
    win = Rect(box[0], box[1], box[2] + 1, box[3] + 1)
    dep = energy(lat, base.with_eta(0.0), u, win).total
    total = energy(lat, base.with_eta(eta), u, win).total
    return VacantPathCertificate(seed, path, dep, total - dep)


# ------------------------------------------------------------------ large M


def largeM_limit(p: float, eta_list, M_list, nu, kernel: Kernel, seeds, t: float = 48, threads=None) -> SweepResult:
    """phi_hat^{p,eta}(M) / M against p * phi_slice(nu), for every eta and M."""
    target = p * phi_slice(nu, kernel.with_eta(None))
    vals, ests, ratios, ses = [], [], [], []
    for eta in eta_list:
        k = kernel.with_eta(eta)
        e, r, s = _sweep(p, M_list, nu, k, seeds, t, threads, lambda M: float(M))
        vals += [(float(eta), int(M)) for M in M_list]
        ests += e
        ratios += r
        ses += s
    res = SweepResult("eta_M", vals, ests, ratios, ses, target)
    res.fit = {"rel_gap": [abs(r - target) / target for r in ratios]}
    if len(eta_list) >= 2:
        agree = []
        for M in M_list:
            idx = [i for i, (_, m) in enumerate(vals) if m == M]
            a, b = idx[0], idx[-1]
            diff = abs(ratios[a] - ratios[b])
            comb = math.hypot(ses[a], ses[b])
            agree.append({"M": M, "diff": diff, "combined_stderr": comb, "ok": diff <= 3 * comb})
        res.fit["eta_agreement"] = agree
    res.extra = {"p": p, "t": t}
    return res
