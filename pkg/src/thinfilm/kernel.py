"""Finite-range interaction kernels on integer offsets.

A kernel is a table c: Z^3 -> [0, inf) with finite support.  The optional
substrate weight eta replaces c by eta on unit bonds touching layer 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

UNIT_OFFSETS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


@dataclass(frozen=True)
class Kernel:
    """Interaction coefficients keyed by offset z = y - x.

    Support is ``|z| <= range_L``; entries outside it are rejected, so the
    nearest-neighbour kernel has range 1.
    """

    range_L: float
    table: dict = field(default_factory=dict)
    nn_floor: float = 0.0
    eta: float | None = None
    cap: float | None = None

    def __post_init__(self):
        if not self.range_L > 0:
            raise ValueError("range_L must be positive")
        clean = {}
        for z, v in self.table.items():
            z = tuple(int(a) for a in z)
            if len(z) != 3 or z == (0, 0, 0):
                raise ValueError(f"bad offset {z}")
            v = float(v)
            if v < 0 or not math.isfinite(v):
                raise ValueError(f"coefficient at {z} must be finite and >= 0")
            if v == 0.0:
                continue
            if math.sqrt(sum(a * a for a in z)) > self.range_L + 1e-12:
                raise ValueError(f"offset {z} lies outside range_L={self.range_L}")
            if self.cap is not None and v > self.cap:
                raise ValueError(f"coefficient {v} at {z} exceeds cap {self.cap}")
            clean[z] = v
        object.__setattr__(self, "table", dict(sorted(clean.items())))
        if self.eta is not None and not (0.0 <= self.eta):
            raise ValueError("eta must be >= 0")

    # construction

    @classmethod
    def nearest_neighbor(cls, c: float = 1.0, eta: float | None = None) -> "Kernel":
        return cls(1.0, {z: c for z in UNIT_OFFSETS}, nn_floor=c if c > 0 else 0.0, eta=eta)

    @classmethod
    def axial(cls, c_e1: float, c_me1: float, c_e2: float, c_me2: float,
              c_e3: float = 1.0, c_me3: float | None = None, eta: float | None = None) -> "Kernel":
        c_me3 = c_e3 if c_me3 is None else c_me3
        vals = (c_e1, c_me1, c_e2, c_me2, c_e3, c_me3)
        return cls(1.0, dict(zip(UNIT_OFFSETS, vals)), eta=eta)

    @classmethod
    def ball(cls, L: float, value: Callable[[np.ndarray], float] | float = 1.0, planar: bool = False) -> "Kernel":
        """All offsets with 0 < |z| <= L; ``value`` may depend on z."""
        n = int(math.floor(L))
        tab = {}
        for z in np.ndindex(2 * n + 1, 2 * n + 1, 2 * n + 1):
            z = tuple(a - n for a in z)
            if z == (0, 0, 0) or (planar and z[2] != 0) or math.dist(z, (0, 0, 0)) > L + 1e-12:
                continue
            tab[z] = value(np.array(z)) if callable(value) else value
        return cls(float(L), tab)

    def with_eta(self, eta: float | None) -> "Kernel":
        return Kernel(self.range_L, dict(self.table), self.nn_floor, eta, self.cap)

    def truncated(self, L: float) -> "Kernel":
        tab = {z: v for z, v in self.table.items() if math.dist(z, (0, 0, 0)) <= L + 1e-12}
        return Kernel(min(L, self.range_L), tab, self.nn_floor, self.eta, self.cap)

    # evaluation

    def __call__(self, z) -> float:
        return self.table.get(tuple(int(a) for a in z), 0.0)

    def eval(self, x, y) -> float:
        z = tuple(int(b) - int(a) for a, b in zip(x, y))
        if self.eta is not None and sum(a * a for a in z) == 1 and int(x[2]) * int(y[2]) == 0:
            return float(self.eta)
        return self.table.get(z, 0.0)

    def offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Support offsets (k, 3) and their base coefficients (k,), sorted."""
        if not self.table:
            return np.zeros((0, 3), np.int64), np.zeros(0)
        z = np.array(list(self.table.keys()), dtype=np.int64)
        return z, np.array(list(self.table.values()), dtype=float)

    def interaction_offsets(self) -> list[tuple[int, int, int]]:
        """Offsets with a nonzero coefficient in the base table or via eta."""
        out = set(self.table)
        if self.eta:
            out.update(UNIT_OFFSETS)
        return sorted(out)

    def pair_weights(self, z, x3: np.ndarray, y3: np.ndarray) -> np.ndarray:
        """Vectorised eval for one offset z over endpoint heights."""
        z = tuple(int(a) for a in z)
        base = self.table.get(z, 0.0)
        w = np.full(np.shape(x3), base, dtype=float)
        if self.eta is not None and sum(a * a for a in z) == 1:
            w[(np.asarray(x3) * np.asarray(y3)) == 0] = self.eta
        return w

    @property
    def is_symmetric(self) -> bool:
        return all(self.table.get(tuple(-a for a in z), 0.0) == v for z, v in self.table.items())

    @property
    def planar_reach(self) -> int:
        """Largest |z1|, |z2| over the support (1 if only eta bonds)."""
        zs = self.interaction_offsets()
        return max([max(abs(z[0]), abs(z[1])) for z in zs] + [0])

    @property
    def total_weight(self) -> float:
        return float(sum(self.table.values()))

    @property
    def max_coefficient(self) -> float:
        vals = list(self.table.values()) + ([self.eta] if self.eta else [])
        return float(max(vals, default=0.0))

    # serialization

    def to_json(self) -> dict:
        out = {"range_L": self.range_L, "entries": [[*z, v] for z, v in self.table.items()]}
        if self.eta is not None:
            out["eta"] = self.eta
        if self.nn_floor:
            out["nn_floor"] = self.nn_floor
        if self.cap is not None:
            out["cap"] = self.cap
        return out

    @classmethod
    def from_json(cls, obj: dict | str) -> "Kernel":
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - {"range_L", "entries", "eta", "nn_floor", "cap"}
        if unknown:
            raise ValueError(f"unknown kernel keys: {sorted(unknown)}")
        tab = {}
        for e in obj.get("entries", []):
            z = tuple(int(a) for a in e[:3])
            tab[z] = tab.get(z, 0.0) + float(e[3])
        return cls(float(obj["range_L"]), tab, float(obj.get("nn_floor", 0.0)), obj.get("eta"), obj.get("cap"))

    @classmethod
    def load(cls, path) -> "Kernel":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)


def hat_norm(xi, r_prime: float) -> float:
    """dist([0, r')^3, [0, r')^3 + xi): the cube-to-cube distance."""
    d = np.maximum(np.abs(np.asarray(xi, dtype=float)) - r_prime, 0.0)
    return float(np.linalg.norm(d))


@dataclass
class DecayMajorant:
    """Nonincreasing radial majorant J on [r_min, r_max], zero beyond r_max."""

    func: Callable[[float], float]
    integral_bound: float | None = None
    r_max: float = math.inf
    r_min: float = 0.0

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        vals = np.vectorize(lambda s: float(self.func(s)) if s <= self.r_max else 0.0, otypes=[float])(r)
        return vals

    def samples(self, radii) -> tuple[np.ndarray, np.ndarray]:
        radii = np.sort(np.asarray(radii, dtype=float))
        return radii, self(radii)

    def is_monotone(self, radii=None) -> bool:
        if radii is None:
            hi = self.r_max if math.isfinite(self.r_max) else 64.0
            radii = np.linspace(max(self.r_min, 1e-6), hi, 2001)
        _, v = self.samples(radii)
        return bool(np.all(np.diff(v) <= 1e-15))

    def radial_integral(self) -> float:
        """Integral over R^2 of J(|x|)|x| dx = 2 pi int J(r) r^2 dr."""
        hi = self.r_max
        val, _ = integrate.quad(lambda r: self.func(r) * r * r, self.r_min, hi, limit=400,
                                epsabs=1e-13, epsrel=1e-12)
        return 2.0 * math.pi * val


@dataclass
class HypothesisReport:
    ok: bool
    violation: str | None = None
    offset: tuple | None = None
    integral: float | None = None
    checked: int = 0


def validate_hypothesis1(kernel: Kernel, majorant: DecayMajorant, *, monotone_grid=None) -> HypothesisReport:
    """Check nn floor, c(z) <= J(|z|) and finiteness of the decay integral.

    Returns the first violation in the order: floor, cap, monotonicity,
    integral.
    """
    checked = 0
    if kernel.nn_floor > 0:
        for z in UNIT_OFFSETS:
            checked += 1
            vals = [kernel(z)] + ([kernel.eta] if kernel.eta is not None else [])
            if min(vals) < kernel.nn_floor:
                return HypothesisReport(False, f"nn floor {kernel.nn_floor} violated", z, checked=checked)
    for z, v in kernel.table.items():
        checked += 1
        r = math.dist(z, (0, 0, 0))
        bound = float(majorant(r))
        if v > bound + 1e-12:
            return HypothesisReport(False, f"c={v} exceeds J({r:.6g})={bound:.6g}", z, checked=checked)
        if kernel.eta is not None and sum(a * a for a in z) == 1 and kernel.eta > bound + 1e-12:
            return HypothesisReport(False, f"eta exceeds J({r:.6g})", z, checked=checked)
    if not majorant.is_monotone(monotone_grid):
        return HypothesisReport(False, "majorant is not nonincreasing", None, checked=checked)
    integral = majorant.radial_integral()
    if not math.isfinite(integral):
        return HypothesisReport(False, "decay integral diverges", None, integral, checked)
    if majorant.integral_bound is not None and integral > majorant.integral_bound + 1e-9:
        return HypothesisReport(False, f"decay integral {integral:.6g} exceeds bound", None, integral, checked)
    return HypothesisReport(True, None, None, integral, checked)


def truncation_bound(majorant: DecayMajorant, L: float, r_prime: float = 1.0 / math.sqrt(3.0),
                     M: int = 0) -> float:
    """Sum over xi in r'Z^3, |xi3| <= M, 2|xi| > L of J(|xi_hat|)|xi|, up to r_max."""
    rmax = majorant.r_max
    if not math.isfinite(rmax):
        raise ValueError("truncation bound needs a finite r_max")
    n = int(math.ceil((rmax + 2 * r_prime) / r_prime))
    k3 = int(math.floor(M / r_prime)) if M > 0 else 0
    a = np.arange(-n, n + 1) * r_prime
    c = np.arange(-k3, k3 + 1) * r_prime
    X, Y, Z = np.meshgrid(a, a, c, indexing="ij")
    xi = np.stack([X, Y, Z], -1).reshape(-1, 3)
    norm = np.linalg.norm(xi, axis=1)
    sel = 2 * norm > L
    hat = np.linalg.norm(np.maximum(np.abs(xi[sel]) - r_prime, 0.0), axis=1)
    return float(np.sum(majorant(hat) * norm[sel]))
