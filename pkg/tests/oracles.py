"""Slow, independent reference implementations used as test oracles.

None of these share code paths with the package: energies loop over all
site pairs, ground states enumerate every labeling, the RNG is replayed in
pure Python integers and Voronoi adjacency is decided by a linear program.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------- rng


def _mix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replay_uniform(seed: int, i1: int, i2: int, trial: int) -> float:
    h = _mix(seed & MASK64)
    for w in (i1, i2, trial):
        h = _mix(h ^ (w & MASK64))
    return (h >> 11) * 2.0**-53


def replay_heights(p: float, M: int, x0: int, y0: int, x1: int, y1: int, seed: int) -> dict:
    return {(a, b): sum(replay_uniform(seed, a, b, k) < p for k in range(1, M + 1))
            for a in range(x0, x1) for b in range(y0, y1)}


# ------------------------------------------------------------- energy


def naive_energy(sites, kernel, values, inside=None, anchor="both") -> float:
    """sum over ordered pairs (x, y), x != y, of kernel.eval(x, y) |u(x) - u(y)|."""
    sites = [tuple(map(int, s)) for s in np.asarray(sites)]
    vals = np.asarray(values, dtype=float)
    n = len(sites)
    inside = [True] * n if inside is None else list(inside)
    total = 0.0
    for i in range(n):
        if not inside[i]:
            continue
        for j in range(n):
            if i == j or (anchor == "both" and not inside[j]):
                continue
            c = kernel.eval(sites[i], sites[j])
            if c:
                total += c * float(np.linalg.norm(np.atleast_1d(vals[i] - vals[j])))
    return total


def brute_ground_state(sites, kernel, values, free, inside=None, anchor="both", states=(-1.0, 1.0)):
    """Minimum of naive_energy over all assignments of ``states`` to free sites."""
    vals = np.asarray(values, dtype=float).copy()
    idx = np.nonzero(np.asarray(free))[0]
    best, arg = math.inf, None
    for combo in itertools.product(states, repeat=len(idx)):
        vals[idx] = combo
        e = naive_energy(sites, kernel, vals, inside, anchor)
        if e < best - 1e-12:
            best, arg = e, vals.copy()
    return best, arg


def brute_ground_state_vec(sites, kernel, values, free, inside=None, chunk: int = 4096) -> float:
    """Same minimum as brute_ground_state, vectorized over assignments.

    For spins in {-1, 1}, |a - b| = 1 - ab, so the energy is a constant plus a
    linear and a quadratic form in the free spins.
    """
    sites = [tuple(map(int, s)) for s in np.asarray(sites)]
    vals = np.asarray(values, dtype=float)
    n = len(sites)
    inside = np.ones(n, bool) if inside is None else np.asarray(inside, bool)
    idx = [i for i in range(n) if inside[i]]
    W = np.zeros((n, n))
    for i in idx:
        for j in idx:
            if i != j:
                W[i, j] = kernel.eval(sites[i], sites[j])
    W = W + W.T  # unordered weight, both orientations
    f = np.nonzero(np.asarray(free) & inside)[0]
    fset = set(f.tolist())
    fixed = np.array([i for i in idx if i not in fset], dtype=int)
    Wff = np.triu(W[np.ix_(f, f)], 1)
    Wfx = W[np.ix_(f, fixed)]
    const = 0.5 * sum(W[i, j] * abs(vals[i] - vals[j]) for i in fixed for j in fixed)
    lin = Wfx @ vals[fixed]
    base = const + Wfx.sum() + Wff.sum()
    k = len(f)
    best = math.inf
    for start in range(0, 2**k, chunk):
        codes = np.arange(start, min(start + chunk, 2**k))
        U = 1.0 - 2.0 * ((codes[:, None] >> np.arange(k)) & 1)
        e = base - U @ lin - np.einsum("ai,ij,aj->a", U, Wff, U)
        best = min(best, float(e.min()))
    return best


def brute_minimizers(sites, kernel, values, free, inside=None, anchor="both", tol=1e-9):
    """All minimizing +-1 assignments as arrays over the free sites."""
    vals = np.asarray(values, dtype=float).copy()
    idx = np.nonzero(np.asarray(free))[0]
    out, best = [], math.inf
    for combo in itertools.product((-1.0, 1.0), repeat=len(idx)):
        vals[idx] = combo
        e = naive_energy(sites, kernel, vals, inside, anchor)
        if e < best - tol:
            best, out = e, [np.array(combo)]
        elif abs(e - best) <= tol:
            out.append(np.array(combo))
    return best, out


# ----------------------------------------------------------------- NN


def face_inradius(points, i, j, lo, hi) -> float:
    """Largest disk radius inside the truncated shared face of cells i and j.

    Solved as a Chebyshev-center LP in the bisector plane.
    """
    P = np.asarray(points, dtype=float)
    x, y = P[i], P[j]
    m = 0.5 * (x + y)
    n = (y - x) / np.linalg.norm(y - x)
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    A, b = [], []
    for k in range(len(P)):
        if k in (i, j):
            continue
        d = P[k] - x
        rhs = 0.5 * (P[k] @ P[k] - x @ x) - m @ d
        row = np.array([e1 @ d, e2 @ d])
        A.append([row[0], row[1], np.linalg.norm(row)])
        b.append(rhs)
    for ax in range(3):
        row = np.array([e1[ax], e2[ax]])
        nr = np.linalg.norm(row)
        A.append([row[0], row[1], nr])
        b.append(hi[ax] - m[ax])
        A.append([-row[0], -row[1], nr])
        b.append(m[ax] - lo[ax])
    res = linprog([0, 0, -1], A_ub=np.array(A), b_ub=np.array(b), bounds=[(None, None), (None, None), (0, None)],
                  method="highs")
    return float(res.x[2]) if res.status == 0 else 0.0


def brute_nn(sites, M: int, tol: float = 1e-7) -> set:
    """Pairs (as site tuples) with a face of positive inradius."""
    P = np.asarray(sites, dtype=float)
    h = 2 * max(M, 1)
    lo = P.min(axis=0) - 1.0
    hi = P.max(axis=0) + 1.0
    lo[2], hi[2] = -h, h
    out = set()
    for i in range(len(P)):
        for j in range(i + 1, len(P)):
            if face_inradius(P, i, j, lo, hi) > tol:
                a, b = tuple(map(int, sites[i])), tuple(map(int, sites[j]))
                out.add((min(a, b), max(a, b)))
    return out


# ------------------------------------------------------------------ L1


def mc_l1(f, g, window, n: int = 2**17, seed: int = 0) -> tuple[float, float]:
    """Sobol estimate of the integral of |f - g| over ``window`` and its scale."""
    from scipy.stats import qmc

    pts = qmc.Sobol(2, scramble=True, seed=seed).random(n)
    xy = np.column_stack([window.x0 + pts[:, 0] * (window.x1 - window.x0),
                          window.y0 + pts[:, 1] * (window.y1 - window.y0)])
    d = np.abs(f.value_at(xy) - g.value_at(xy))
    return float(d.mean() * window.area), float(d.std() * window.area / math.sqrt(n))
