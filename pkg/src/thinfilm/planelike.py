"""Periodic constrained minimizers and plane-like ground states on Z^2 x {0..M}.

For a primitive direction nu_int = (a, b) the lattice Z^2 splits into level
lines {<z, nu_int> = s}.  Each level is the coset s w + Z g with g = (b, -a)
spanning Z_nu and a w1 + b w2 = 1, so z = s w + j g with integer (s, j).
An (m, nu)-periodic configuration depends on (s, j mod m, height).

The admissible class A^{theta, lambda}_{m, nu} fixes u = +1 where
<P2 z, nu> < theta and u = -1 where <P2 z, nu> > lambda.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .energy import SpinConfig
from .groundstate import CutInstance, build_cut_instance, minimal_minimizer, solve_mincut
from .energy import ISING_STATES
from .geometry import Rect
from .kernel import Kernel
from .lattice import generate_layered

SQRT2 = math.sqrt(2.0)


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, x, y) with a x + b y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


@dataclass(frozen=True)
class RationalDirection:
    nu_int: tuple[int, int]
    shear: int = 0

    def __post_init__(self):
        a, b = (int(v) for v in self.nu_int)
        if (a, b) == (0, 0):
            raise ValueError("direction must be nonzero")
        g = math.gcd(a, b)
        if g != 1:
            warnings.warn(f"direction {(a, b)} is not primitive; using {(a // g, b // g)}", stacklevel=2)
            a, b = a // g, b // g
        if max(abs(a), abs(b)) > 8:
            raise ValueError("directions with |nu_int|_inf > 8 are not supported")
        object.__setattr__(self, "nu_int", (a, b))

    @property
    def nu(self) -> np.ndarray:
        v = np.array(self.nu_int, dtype=float)
        return v / np.hypot(*v)

    @property
    def norm(self) -> float:
        return math.hypot(*self.nu_int)

    @property
    def z_generator(self) -> tuple[int, int]:
        a, b = self.nu_int
        return b, -a

    @property
    def w(self) -> tuple[int, int]:
        """Integer w with <w, nu_int> = 1, sheared by ``shear`` generators."""
        a, b = self.nu_int
        _, x, y = egcd(a, b)
        g = self.z_generator
        return x + self.shear * g[0], y + self.shear * g[1]

    def level(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.int64)
        return z[..., 0] * self.nu_int[0] + z[..., 1] * self.nu_int[1]

    def coords(self, z) -> tuple[np.ndarray, np.ndarray]:
        """(s, j) with z = s w + j g."""
        z = np.asarray(z, dtype=np.int64)
        s = self.level(z)
        w, g = np.array(self.w), np.array(self.z_generator)
        r = z - s[..., None] * w
        gg = int(g @ g)
        num = r @ g
        j = num // gg
        if np.any(j * gg != num):
            raise AssertionError("decomposition is not integral")
        return s, j

    def point(self, s, j) -> np.ndarray:
        s, j = np.asarray(s, dtype=np.int64), np.asarray(j, dtype=np.int64)
        w, g = np.array(self.w), np.array(self.z_generator)
        return s[..., None] * w + j[..., None] * g

    def level_range(self, lo: float, hi: float) -> tuple[int, int]:
        """Integer levels s with lo <= s / |nu_int| <= hi."""
        n = self.norm
        return int(math.ceil(lo * n - 1e-9)), int(math.floor(hi * n + 1e-9))


@dataclass
class FundamentalDomain:
    m: int
    dir: RationalDirection
    band: tuple[float, float]
    margin: float = 0.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def levels(self) -> tuple[int, int]:
        return self.dir.level_range(self.band[0] - self.margin, self.band[1] + self.margin)

    @property
    def member_sites(self) -> np.ndarray:
        s0, s1 = self.levels
        S, J = np.meshgrid(np.arange(s0, s1 + 1), np.arange(self.m), indexing="ij")
        return self.dir.point(S.ravel(), J.ravel())

    def decompose(self, z) -> tuple[np.ndarray, np.ndarray]:
        """z = z1 + z2 with z1 in m Z_nu and z2 a representative."""
        s, j = self.dir.coords(z)
        z2 = self.dir.point(s, np.mod(j, self.m))
        return np.asarray(z) - z2, z2

    def in_mZnu(self, z) -> np.ndarray:
        s, j = self.dir.coords(z)
        return (s == 0) & (np.mod(j, self.m) == 0)


def fundamental_domain(m: int, dir: RationalDirection, band, margin: float = 0.0) -> FundamentalDomain:
    return FundamentalDomain(m, dir, (float(band[0]), float(band[1])), margin)


# ------------------------------------------------------------ configurations


@dataclass
class PeriodicSpin:
    """Values on band levels s_lo..s_hi, residues j mod m and heights 0..M."""

    dir: RationalDirection
    m: int
    theta: float
    lam: float
    M: int
    values: np.ndarray  # (n_levels, m, M + 1) of +-1
    energy: float = math.nan

    @property
    def levels(self) -> tuple[int, int]:
        return self.dir.level_range(self.theta, self.lam)

    def value_at(self, z, h) -> np.ndarray:
        z = np.asarray(z, dtype=np.int64).reshape(-1, 2)
        h = np.broadcast_to(np.asarray(h, dtype=np.int64), (len(z),))
        s, j = self.dir.coords(z)
        s0, s1 = self.levels
        out = np.where(s < s0, 1, -1).astype(np.int64)
        band = (s >= s0) & (s <= s1)
        if band.any():
            out[band] = self.values[s[band] - s0, np.mod(j[band], self.m), h[band]]
        return out

    def shifted(self, k) -> "ShiftedSpin":
        return ShiftedSpin(self, tuple(int(a) for a in k))

    def extended(self, m: int) -> "PeriodicSpin":
        """The same configuration viewed as (m', nu)-periodic, m' a multiple of m."""
        if m % self.m:
            raise ValueError("new period must be a multiple of the old one")
        reps = np.tile(self.values, (1, m // self.m, 1))
        return PeriodicSpin(self.dir, m, self.theta, self.lam, self.M, reps, self.energy * (m // self.m))

    def dump_text(self) -> str:
        """Text grid per layer; rows sorted by level, columns by generator coordinate."""
        s0, _ = self.levels
        lines = [f"# planelike nu={self.dir.nu_int} m={self.m} theta={self.theta} lambda={self.lam} M={self.M}"]
        for h in range(self.M + 1):
            lines.append(f"# layer {h}")
            for i in range(self.values.shape[0]):
                row = " ".join("+" if v > 0 else "-" for v in self.values[i, :, h])
                lines.append(f"{(s0 + i) / self.dir.norm:+.6f} {row}")
        return "\n".join(lines) + "\n"


@dataclass
class ShiftedSpin:
    base: PeriodicSpin
    k: tuple[int, int]

    def value_at(self, z, h) -> np.ndarray:
        z = np.asarray(z, dtype=np.int64).reshape(-1, 2)
        return self.base.value_at(z - np.asarray(self.k), h)


# --------------------------------------------------------------- quotient


def _node_ids(dir: RationalDirection, m: int, M: int, s0: int, s, j, h) -> np.ndarray:
    return ((s - s0) * m + np.mod(j, m)) * (M + 1) + h


def _level_reach(dir: RationalDirection, kernel: Kernel) -> int:
    zs = kernel.interaction_offsets()
    return max([abs(z[0] * dir.nu_int[0] + z[1] * dir.nu_int[1]) for z in zs] + [0])


def quotient_instance(dir: RationalDirection, m: int, theta: float, lam: float, M: int,
                      kernel: Kernel) -> tuple[CutInstance, tuple[int, int]]:
    """Cut instance of E_M(., F_{m,nu}) over A^{theta, lambda}_{m, nu}.

    Each ordered pair (x, y) with x in the fundamental domain contributes
    c(y - x)|u(x) - u(y)| on the edge {x, rep(y)}; self-loops vanish by
    periodicity and levels outside the band act as frozen +1 / -1.
    """
    if lam < theta:
        raise ValueError(f"empty band [{theta}, {lam}]")
    s0, s1 = dir.level_range(theta, lam)
    if s1 < s0:
        raise ValueError(f"band [{theta}, {lam}] contains no lattice level")
    K = _level_reach(dir, kernel)
    n_lev = s1 - s0 + 1
    n = n_lev * m * (M + 1)
    S, J, H = np.meshgrid(np.arange(s0 - K, s1 + K + 1), np.arange(m), np.arange(M + 1), indexing="ij")
    S, J, H = S.ravel(), J.ravel(), H.ravel()
    X = dir.point(S, J)
    x_free = (S >= s0) & (S <= s1)
    x_val = np.where(S < s0, 1.0, -1.0)
    xid = np.where(x_free, _node_ids(dir, m, M, s0, S, J, H), -1)
    unary = np.zeros((n, 2))
    pa, pb, pw = [], [], []
    offset = 0.0
    for z in kernel.interaction_offsets():
        hy = H + z[2]
        ok = (hy >= 0) & (hy <= M)
        Y = X[ok] + np.array(z[:2])
        sy, jy = dir.coords(Y)
        w = kernel.pair_weights(z, H[ok], hy[ok])
        y_free = (sy >= s0) & (sy <= s1)
        y_val = np.where(sy < s0, 1.0, -1.0)
        yid = np.where(y_free, _node_ids(dir, m, M, s0, sy, jy, hy[ok]), -1)
        xf, xi, xv = x_free[ok], xid[ok], x_val[ok]
        both = xf & y_free & (xi != yid)
        pa.append(np.minimum(xi[both], yid[both]))
        pb.append(np.maximum(xi[both], yid[both]))
        pw.append(w[both])
        # free x, frozen y: cost when x takes the other label
        sel = xf & ~y_free
        np.add.at(unary, (xi[sel], np.where(y_val[sel] > 0, 0, 1)), 2.0 * w[sel])
        sel = ~xf & y_free
        np.add.at(unary, (yid[sel], np.where(xv[sel] > 0, 0, 1)), 2.0 * w[sel])
        sel = ~xf & ~y_free
        offset += float(np.sum(w[sel] * np.abs(xv[sel] - y_val[sel])))
    a, b, w = np.concatenate(pa), np.concatenate(pb), np.concatenate(pw)
    if len(a):
        key = a * n + b
        uk, inv = np.unique(key, return_inverse=True)
        coup = np.bincount(inv.ravel(), weights=w)
        a, b = uk // n, uk % n
    else:
        coup = np.zeros(0)
    inst = CutInstance(ISING_STATES.copy(), unary, a.astype(np.int64), b.astype(np.int64), coup, offset)
    return inst, (s0, s1)


def infimal_minimizer(m: int, dir: RationalDirection, theta: float, lam: float, M: int, kernel: Kernel,
                      which: str = "min") -> PeriodicSpin:
    """Pointwise-minimal minimizer of E_M(., F_{m,nu}) over A^{theta, lambda}_{m, nu}."""
    inst, (s0, s1) = quotient_instance(dir, m, theta, lam, M, kernel)
    gs = minimal_minimizer(inst) if which == "min" else solve_mincut(inst, which="max")
    vals = np.where(gs.labels == 1, 1, -1).reshape(s1 - s0 + 1, m, M + 1)
    return PeriodicSpin(dir, m, theta, lam, M, vals, gs.energy)


def periodic_energy(u, dir: RationalDirection, m: int, M: int, kernel: Kernel, s_range) -> float:
    """E_M(u, F_{m,nu}) summed over x on levels s_range[0]..s_range[1]."""
    S, J, H = np.meshgrid(np.arange(s_range[0], s_range[1] + 1), np.arange(m), np.arange(M + 1), indexing="ij")
    S, J, H = S.ravel(), J.ravel(), H.ravel()
    X = dir.point(S, J)
    ux = u.value_at(X, H)
    total = 0.0
    for z in kernel.interaction_offsets():
        hy = H + z[2]
        ok = (hy >= 0) & (hy <= M)
        uy = u.value_at(X[ok] + np.array(z[:2]), hy[ok])
        w = kernel.pair_weights(z, H[ok], hy[ok])
        total += float(np.sum(w * np.abs(ux[ok] - uy)))
    return total


# ------------------------------------------------------------------ checks


@dataclass
class CheckReport:
    ok: bool
    violations: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)


def check_no_symmetry_breaking(dir: RationalDirection, theta: float, lam: float, M: int, kernel: Kernel,
                               m_list=(1, 2, 3)) -> CheckReport:
    """u_m must equal the m-fold extension of u_1 at every site."""
    if any(m not in (1, 2, 3, 4) for m in m_list):
        raise ValueError("m_list must be a subset of {1, 2, 3, 4}")
    u1 = infimal_minimizer(1, dir, theta, lam, M, kernel)
    bad = []
    for m in m_list:
        um = infimal_minimizer(m, dir, theta, lam, M, kernel)
        diff = np.argwhere(um.values != u1.extended(m).values)
        if len(diff):
            bad.append((m, diff[0].tolist()))
    return CheckReport(not bad, bad, {"energy_1": u1.energy})


def check_birkhoff(u, shifts, window: int = 8) -> CheckReport:
    """tau_k u <= u when <k, nu> <= 0 and tau_k u >= u when <k, nu> >= 0 on a test window."""
    base = u.base if isinstance(u, ShiftedSpin) else u
    dir = base.dir
    s0, s1 = base.levels
    pad = window
    g = np.array(dir.z_generator)
    S, J, H = np.meshgrid(np.arange(s0 - pad, s1 + pad + 1), np.arange(-window, window + 1),
                          np.arange(base.M + 1), indexing="ij")
    Z = dir.point(S.ravel(), J.ravel())
    H = H.ravel()
    uz = u.value_at(Z, H)
    bad = []
    for k in shifts:
        k = np.asarray(k, dtype=np.int64)
        tk = u.value_at(Z - k, H)
        d = int(k @ np.asarray(dir.nu_int))
        if d <= 0:
            v = np.nonzero(tk > uz)[0]
            if len(v):
                bad.append((tuple(k.tolist()), "tau_k u > u", tuple(Z[v[0]].tolist()) + (int(H[v[0]]),)))
        if d >= 0:
            v = np.nonzero(tk < uz)[0]
            if len(v):
                bad.append((tuple(k.tolist()), "tau_k u < u", tuple(Z[v[0]].tolist()) + (int(H[v[0]]),)))
    return CheckReport(not bad, bad, {"n_sites": len(Z), "generator": g.tolist()})


def shift_set(r: int = 3) -> list[tuple[int, int]]:
    return [(a, b) for a in range(-r, r + 1) for b in range(-r, r + 1)]


# ------------------------------------------------------------ plane-like


def unconstrained(u: PeriodicSpin) -> bool:
    """All band sites with <P2 z, nu> >= lambda - sqrt 2 carry -1."""
    s0, s1 = u.levels
    lev = (np.arange(s0, s1 + 1) / u.dir.norm) >= u.lam - SQRT2 - 1e-12
    return bool(np.all(u.values[lev] == -1))


def interface_width(u: PeriodicSpin, kernel: Kernel) -> float:
    """max |<P2 x, nu>| over endpoints of interacting pairs with u(x) != u(y)."""
    dir = u.dir
    s0, s1 = u.levels
    K = _level_reach(dir, kernel)
    S, J, H = np.meshgrid(np.arange(s0 - K, s1 + K + 1), np.arange(u.m), np.arange(u.M + 1), indexing="ij")
    S, J, H = S.ravel(), J.ravel(), H.ravel()
    X = dir.point(S, J)
    ux = u.value_at(X, H)
    width = 0.0
    for z in kernel.interaction_offsets():
        hy = H + z[2]
        ok = (hy >= 0) & (hy <= u.M)
        Y = X[ok] + np.array(z[:2])
        w = kernel.pair_weights(z, H[ok], hy[ok])
        dis = (u.value_at(Y, hy[ok]) != ux[ok]) & (w > 0)
        if dis.any():
            lx = np.abs(dir.level(X[ok][dis])) / dir.norm
            ly = np.abs(dir.level(Y[dis])) / dir.norm
            width = max(width, float(lx.max()), float(ly.max()))
    return width


class ColumnSet:
    """Finite set of columns in Z^2 usable as a window."""

    def __init__(self, cols):
        self.cols = {tuple(map(int, c)) for c in cols}

    def contains(self, xy) -> np.ndarray:
        xy = np.asarray(xy)
        return np.array([(int(a), int(b)) in self.cols for a, b in xy.reshape(-1, 2)], dtype=bool)

    def interior(self, L: float) -> "ColumnSet":
        """Columns at distance > L from every column outside the set."""
        r = int(math.floor(L))
        out = []
        for a, b in self.cols:
            good = True
            for da in range(-r, r + 1):
                for db in range(-r, r + 1):
                    if da * da + db * db <= L * L + 1e-9 and (a + da, b + db) not in self.cols:
                        good = False
                        break
                if not good:
                    break
            if good:
                out.append((a, b))
        return ColumnSet(out)


@dataclass
class GroundAudit:
    gamma: list
    n_free: int
    energy_before: float
    energy_after: float

    @property
    def improvement(self) -> float:
        return self.energy_before - self.energy_after


def ground_state_audit(u, M: int, kernel: Kernel, gamma: ColumnSet) -> GroundAudit:
    """Re-minimize E_M(., Gamma) with u frozen within L of the complement of Gamma."""
    cols = np.array(sorted(gamma.cols))
    pad = int(math.ceil(kernel.range_L)) + 1
    region = Rect(int(cols[:, 0].min()) - pad, int(cols[:, 1].min()) - pad,
                  int(cols[:, 0].max()) + pad + 1, int(cols[:, 1].max()) + pad + 1)
    lat = generate_layered(M, region)
    spins = u.value_at(lat.sites[:, :2], lat.sites[:, 2])
    free_cols = gamma.interior(kernel.range_L)
    free = free_cols.contains(lat.sites[:, :2])
    cfg = SpinConfig.ising(spins, ~free)
    inst = build_cut_instance(lat, kernel, cfg, gamma, anchor="first")
    before = float(inst.evaluate(cfg.labels[inst.free_sites])[0])
    gs = minimal_minimizer(inst)
    return GroundAudit(sorted(gamma.cols), inst.n, before, gs.energy)


def random_gamma(rng: np.random.Generator, dir: RationalDirection, lam: float, L: float) -> ColumnSet:
    """Union of one to three random rectangles straddling the interface band."""
    cols = set()
    v = dir.nu
    t = np.array([-v[1], v[0]])
    pad = int(math.ceil(L)) + 1
    for _ in range(int(rng.integers(1, 4))):
        c = rng.uniform(-3, 3) * t + rng.uniform(-1, lam + 1) * v
        wx, wy = (int(a) for a in rng.integers(2 * pad, 2 * pad + 7, size=2))
        x0, y0 = int(round(c[0])) - wx // 2, int(round(c[1])) - wy // 2
        cols.update((a, b) for a in range(x0, x0 + wx) for b in range(y0, y0 + wy))
    return ColumnSet(cols)


@dataclass
class PlanelikeCertificate:
    nu_int: tuple
    M: int
    lam: float
    lam_meas: float
    energy: float
    criterion_met: bool
    aborted: bool = False
    same_as_wider: list = field(default_factory=list)
    widened: list = field(default_factory=list)
    audits: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def max_improvement(self) -> float:
        return max((a.improvement for a in self.audits), default=0.0)

    def to_json(self) -> str:
        obj = {
            "nu_int": list(self.nu_int), "M": self.M, "lambda": self.lam, "lambda_meas": self.lam_meas,
            "energy_per_period": self.energy, "criterion_met": self.criterion_met, "aborted": self.aborted,
            "same_as_wider_band": self.same_as_wider, "widened_band_audit": self.widened,
            "subwindow_audits": [{"gamma_size": len(a.gamma), "n_free": a.n_free, "energy_before": a.energy_before,
                                  "energy_after": a.energy_after, "improvement": a.improvement}
                                 for a in self.audits],
            "diagnostics": self.diagnostics,
        }
        return json.dumps(obj, indent=2, sort_keys=True)


class PlanelikeAbort(RuntimeError):
    def __init__(self, cert: PlanelikeCertificate):
        super().__init__(f"lambda exceeded cap 16(M+1) = {16 * (cert.M + 1)} for nu={cert.nu_int}")
        self.certificate = cert


def certify_planelike(dir: RationalDirection, M: int, kernel: Kernel, *, lam_start: float = 2.0,
                      lam_step: float = 1.0, n_audits: int = 6, widen=(1, 2), seed: int = 0):
    """Grow lambda until u^{0, lambda}_{1, nu} is unconstrained, then audit it.

    Returns (u, lambda_meas, certificate).  The certificate holds the
    widened-band audits (u stays a minimizer on [-n, lambda + n]) and
    ``n_audits`` re-solves on random finite windows with frozen exterior.
    """
    cap = 16 * (M + 1)
    lam = lam_start
    history = []
    while True:
        u = infimal_minimizer(1, dir, 0.0, lam, M, kernel)
        ok = unconstrained(u)
        history.append((lam, u.energy, ok))
        if ok:
            break
        lam += lam_step
        if lam > cap:
            cert = PlanelikeCertificate(dir.nu_int, M, lam, math.nan, u.energy, False, True,
                                        diagnostics={"history": history})
            raise PlanelikeAbort(cert)
    width = interface_width(u, kernel)
    cert = PlanelikeCertificate(dir.nu_int, M, lam, width, u.energy, True, diagnostics={"history": history})
    s_range = (u.levels[0] - 2 * _level_reach(dir, kernel) - 1, u.levels[1] + 2 * _level_reach(dir, kernel) + 1)
    for n in widen:
        wider = infimal_minimizer(1, dir, 0.0, lam + n, M, kernel)
        same = bool(np.array_equal(wider.values[: u.values.shape[0]], u.values)
                    and np.all(wider.values[u.values.shape[0]:] == -1))
        cert.same_as_wider.append({"n": n, "same": same})
        inst, _ = quotient_instance(dir, 1, -n, lam + n, M, kernel)
        best = minimal_minimizer(inst).energy
        e_u = periodic_energy(u, dir, 1, M, kernel, (s_range[0] - n * 3, s_range[1] + n * 3))
        cert.widened.append({"n": n, "energy_u": e_u, "min_energy": best, "is_minimizer": e_u <= best + 1e-9})
    rng = np.random.default_rng(seed)
    for _ in range(n_audits):
        gamma = random_gamma(rng, dir, lam, kernel.range_L)
        cert.audits.append(ground_state_audit(u, M, kernel, gamma))
    return u, width, cert


# ------------------------------------------------------- further audits


def check_domain_invariance(dir: RationalDirection, theta: float, lam: float, M: int, kernel: Kernel,
                            m: int = 1, shear: int = 1, window: int = 6) -> CheckReport:
    """The infimal minimizer must not depend on the representative set chosen."""
    other = RationalDirection(dir.nu_int, shear=dir.shear + shear)
    u = infimal_minimizer(m, dir, theta, lam, M, kernel)
    v = infimal_minimizer(m, other, theta, lam, M, kernel)
    s0, s1 = u.levels
    S, J, H = np.meshgrid(np.arange(s0 - 2, s1 + 3), np.arange(-window, window + 1), np.arange(M + 1), indexing="ij")
    Z = dir.point(S.ravel(), J.ravel())
    H = H.ravel()
    bad = np.nonzero(u.value_at(Z, H) != v.value_at(Z, H))[0]
    viol = [tuple(Z[i].tolist()) + (int(H[i]),) for i in bad[:5]]
    return CheckReport(not len(bad), viol, {"energy": u.energy, "energy_sheared": v.energy})


def check_translation_energy(u: PeriodicSpin, kernel: Kernel, shifts) -> CheckReport:
    """E_M(tau_k u, F) = E_M(u, F) for each shift k, exactly."""
    dir = u.dir
    K = _level_reach(dir, kernel)
    span = max((abs(int(np.dot(k, dir.nu_int))) for k in shifts), default=0)
    s_range = (u.levels[0] - K - span - 1, u.levels[1] + K + span + 1)
    e0 = periodic_energy(u, dir, u.m, u.M, kernel, s_range)
    bad = []
    for k in shifts:
        e = periodic_energy(u.shifted(k), dir, u.m, u.M, kernel, s_range)
        if e != e0:
            bad.append((tuple(k), e))
    return CheckReport(not bad, bad, {"energy": e0})


def fit_width_constant(M_list, widths) -> dict:
    """Least-squares C in lambda_meas ~ C (M + 1), plus a super-linearity flag.

    The flag is raised when the width per layer grows over consecutive M.
    """
    M = np.asarray(M_list, dtype=float) + 1.0
    w = np.asarray(widths, dtype=float)
    C = float(w @ M / (M @ M))
    per = w / M
    return {"C": C, "per_layer": per.tolist(), "superlinear": bool(len(per) > 1 and np.all(np.diff(per) > 1e-12))}
