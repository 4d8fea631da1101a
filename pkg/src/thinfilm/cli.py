"""Batch entry point: ``thinfilm run <config.json>`` and ``thinfilm summarize <dir>``.

A config is a JSON object::

    {"experiment": "tension", "seeds": {"base": 0, "count": 8}, "params": {...}}

Unknown keys are rejected; every default is written back into the manifest.
Result CSVs hold only numbers derived from (config, seeds); timestamps and
runtimes live in ``manifest.json``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys
import time
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (P_SITE, largeM_limit, linear_law, percolation_regime, phi1_limit,
                          vacant_path_certificate)
from .geometry import OrientedRect, Rect
from .groundstate import build_cut_instance, exhaustive_minimum, minimal_minimizer
from .energy import SpinConfig
from .kernel import Kernel
from .lattice import DepositionParams, generate_deposition, generate_layered, validate_admissibility
from .parallel import THREADS_ENV, default_threads
from .rng import RNG_NAME, uniforms
from .tension import (CellProblemSpec, LatticeSource, eta_trace_monotonicity, estimate_phi, primitive,
                      strip_partition, subadditivity_audit, two_phase_datum)

EXPERIMENTS = ("lattice-gen", "groundstate", "tension", "phi1", "linear-law", "percolation", "large-m",
               "planelike", "audit")
TOP_KEYS = {"experiment", "seeds", "out", "params"}
KERNEL_KEYS = {"kind", "c", "eta", "L", "value", "planar", "table"}

DEFAULT_KERNEL = {"kind": "nn", "c": 1.0, "eta": None}

DEFAULTS = {
    "lattice-gen": {"p": 0.5, "M": 4, "region": [0, 0, 16, 16], "r": 1.0, "R": 1.0},
    "groundstate": {"source": "deposition", "p": 0.5, "M": 2, "region": [-1, -1, 8, 8], "window": [0, 0, 7, 7],
                    "datum": "random", "nu": [0, 1], "kernel": DEFAULT_KERNEL, "verify_exhaustive": True},
    "tension": {"nu": [0, 1], "source": "layered", "p": 1.0, "M": 0, "eta": None, "t_list": [16, 32],
                "trace_width": None, "kernel": DEFAULT_KERNEL},
    "phi1": {"nu": [0, 1], "M_list": [0, 1, 3, 7], "t": 32, "kernel": DEFAULT_KERNEL},
    "linear-law": {"p": 0.7, "M_list": [10, 20, 40], "nu": [0, 1], "t": 48, "kernel": DEFAULT_KERNEL},
    "percolation": {"p": 0.1, "M": 1, "eta_list": [0.1, 0.01], "nu": [0, 1], "t": 64, "p_site": P_SITE,
                    "control": {"p": 0.9, "M": 3}, "vacant": {"N": 64, "count": 20, "base": 0},
                    "kernel": DEFAULT_KERNEL},
    "large-m": {"p": 0.5, "eta_list": [1.0, 0.5], "M_list": [40], "nu": [0, 1], "t": 48, "kernel": DEFAULT_KERNEL},
    "planelike": {"nu_list": [[0, 1], [1, 1], [1, 2]], "M_list": [1, 2, 4], "m_list": [1, 2, 3],
                  "shift_radius": 3, "n_audits": 6, "kernel": DEFAULT_KERNEL},
    "audit": {"nu": [0, 1], "M": 1, "p": 0.5, "t": 16, "widths": [1, 2, 3], "pieces": 2,
              "kernel": DEFAULT_KERNEL},
}

# columns of table.csv plotted by summarize
PLOTS = {
    "tension": [("t", "mean")],
    "phi1": [("M", "per_layer")],
    "linear-law": [("M", "ratio")],
    "percolation": [("eta", "ratio")],
    "large-m": [("M", "ratio")],
    "planelike": [("M", "lambda_meas")],
}


class ConfigError(ValueError):
    def __init__(self, message: str, keys=()):
        super().__init__(message)
        self.keys = list(keys)


class TaskError(RuntimeError):
    def __init__(self, task: str, cause: BaseException):
        super().__init__(f"task {task} failed: {cause!r}")
        self.task = task


# ------------------------------------------------------------------ config


def _merge(defaults: dict, given: dict, where: str) -> dict:
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}", unknown)
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(defaults[k], dict) and isinstance(v, dict) and k != "kernel":
            out[k] = _merge(defaults[k], v, f"{where}.{k}")
        else:
            out[k] = v
    return out


def _kernel_cfg(cfg: dict) -> dict:
    unknown = sorted(set(cfg) - KERNEL_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys in params.kernel: {unknown}", unknown)
    kind = cfg.get("kind", "nn")
    if kind not in ("nn", "ball", "table"):
        raise ConfigError(f"unknown kernel kind {kind!r}", ["kind"])
    return {"kind": kind, **{k: v for k, v in cfg.items() if k != "kind"}}


def make_kernel(cfg: dict) -> Kernel:
    cfg = _kernel_cfg(cfg)
    if cfg["kind"] == "nn":
        k = Kernel.nearest_neighbor(float(cfg.get("c", 1.0)))
    elif cfg["kind"] == "ball":
        k = Kernel.ball(float(cfg["L"]), float(cfg.get("value", 1.0)), bool(cfg.get("planar", False)))
    else:
        k = Kernel.from_json(json.dumps(cfg["table"]))
    eta = cfg.get("eta")
    return k.with_eta(None if eta is None else float(eta))


def resolve_config(raw: dict, *, seed_base: int | None = None, seeds: int | None = None,
                   out: str | None = None) -> dict:
    """Validate ``raw`` and materialize every default; CLI flags override the file."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {unknown}", unknown)
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {list(EXPERIMENTS)}, got {exp!r}", ["experiment"])
    params = _merge(DEFAULTS[exp], raw.get("params", {}), "params")
    if "kernel" in params:
        params["kernel"] = _kernel_cfg(params["kernel"])
    s = raw.get("seeds", {"base": 0, "count": 8})
    if isinstance(s, list):
        seed_list = [int(x) for x in s]
    elif isinstance(s, dict):
        bad = sorted(set(s) - {"base", "count"})
        if bad:
            raise ConfigError(f"unknown keys in seeds: {bad}", bad)
        seed_list = list(range(int(s.get("base", 0)), int(s.get("base", 0)) + int(s.get("count", 8))))
    else:
        raise ConfigError("seeds must be a list or {base, count}", ["seeds"])
    if seed_base is not None or seeds is not None:
        base = seed_list[0] if seed_base is None and seed_list else (seed_base or 0)
        count = len(seed_list) if seeds is None else seeds
        seed_list = list(range(base, base + count))
    return {"experiment": exp, "seeds": seed_list, "out": out or raw.get("out") or f"results/{exp}",
            "params": params}


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k != "out"}
    return hashlib.sha256(json.dumps(body, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# ------------------------------------------------------------------ output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)) or v is None:
        return "" if v is None else str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, rows: list[dict], columns: list[str] | None = None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    path.write_text(buf.getvalue())


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


TENSION_COLUMNS = ["nu1", "nu2", "source", "p", "M", "eta", "t", "seed", "energy_over_t"]


def _tension_rows(nu, source: str, p, M, eta, est) -> list[dict]:
    return [{"nu1": nu[0], "nu2": nu[1], "source": source, "p": p, "M": M, "eta": eta, "t": est.t,
             "seed": "" if s is None else s, "energy_over_t": v} for s, v in est.per_sample]


# ------------------------------------------------------------- experiments


class Run:
    """Collects files, task records and summary lines for one experiment run."""

    def __init__(self, cfg: dict, out: Path, threads: int):
        self.cfg, self.out, self.threads = cfg, out, threads
        self.files: list[str] = []
        self.tasks: list[dict] = []
        self.summary: list[str] = []

    def csv(self, name: str, rows, columns=None):
        write_csv(self.out / name, rows, columns)
        self.files.append(name)

    def text(self, name: str, body: str):
        (self.out / name).write_text(body)
        self.files.append(name)

    def task(self, name: str, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            res = fn(*args, **kw)
        except Exception as e:  # surfaced with the task id
            self.tasks.append({"task": name, "status": "failed", "runtime_s": time.perf_counter() - t0,
                               "error": repr(e)})
            raise TaskError(name, e) from e
        self.tasks.append({"task": name, "status": "ok", "runtime_s": time.perf_counter() - t0})
        return res


def _lattice_gen(run: Run, P: dict, seeds):
    rows = []
    region = Rect(*P["region"])
    for s in seeds:
        lat = run.task(f"seed={s}", generate_deposition, DepositionParams(P["p"], P["M"], region, s))
        rep = validate_admissibility(lat, P["r"], P["R"], region=region)
        heights = np.array(list(lat.column_heights().values()))
        run.text(f"lattice_{s}.txt", lat.serialize())
        rows.append({"seed": s, "n_sites": lat.n, "mean_height": float(heights.mean()),
                     "max_height": int(heights.max()), "admissible": rep.ok})
    run.csv("table.csv", rows, ["seed", "n_sites", "mean_height", "max_height", "admissible"])
    run.summary.append(f"{len(rows)} lattices; mean height {np.mean([r['mean_height'] for r in rows]):.4f} "
                       f"(expected {P['p'] * P['M']:.4f})")


def _random_datum(lat, seed: int) -> np.ndarray:
    u = uniforms(seed, lat.sites[:, 0], lat.sites[:, 1], lat.sites[:, 2])
    return np.where(u < 0.5, 1, -1).astype(np.int64)


def _groundstate(run: Run, P: dict, seeds):
    k = make_kernel(P["kernel"])
    region, win = Rect(*P["region"]), Rect(*P["window"])
    rows = []
    for s in seeds:
        lat = (generate_layered(P["M"], region) if P["source"] == "layered"
               else generate_deposition(DepositionParams(P["p"], P["M"], region, s)))
        spins = _random_datum(lat, s) if P["datum"] == "random" else two_phase_datum(lat, primitive(P["nu"]), (0, 0))
        xy = lat.sites[:, :2]
        frozen = ~win.contains(xy) | (win.boundary_distance(xy) <= k.range_L + 1e-9)
        inst = build_cut_instance(lat, k, SpinConfig.ising(spins, frozen), win)
        gs = run.task(f"seed={s}", minimal_minimizer, inst)
        ex = None
        if P["verify_exhaustive"] and inst.n <= 20:
            ex = float(exhaustive_minimum(inst)[0])
        rows.append({"seed": s, "n_sites": lat.n, "n_free": inst.n, "energy": gs.energy, "exhaustive_energy": ex,
                     "match": None if ex is None else gs.energy == ex})
    run.csv("table.csv", rows, ["seed", "n_sites", "n_free", "energy", "exhaustive_energy", "match"])
    checked = [r for r in rows if r["match"] is not None]
    run.summary.append(f"{len(rows)} ground states; exhaustive matches {sum(r['match'] for r in checked)}/{len(checked)}")


def _tension(run: Run, P: dict, seeds):
    k = make_kernel({**P["kernel"], "eta": P["eta"] if P["eta"] is not None else P["kernel"].get("eta")})
    nu = primitive(P["nu"])
    spec = CellProblemSpec(nu, max(P["t_list"]), k, LatticeSource(P["source"], P["M"], P["p"]), P["trace_width"])
    ests, fit = run.task("estimate_phi", estimate_phi, spec, P["t_list"], seeds, run.threads)
    rows = []
    for e in ests:
        rows += _tension_rows(nu, P["source"], P["p"], P["M"], k.eta, e)
    run.csv("samples.csv", rows, TENSION_COLUMNS)
    run.csv("extrapolation.csv", [{"t": t, "mean": e.mean, "stderr": e.stderr, "residual": r}
                                  for t, e, r in zip(fit.ts, ests, fit.residuals)], ["t", "mean", "stderr", "residual"])
    table = [{"nu1": nu[0], "nu2": nu[1], "source": P["source"], "p": P["p"], "M": P["M"], "eta": k.eta,
              "a": fit.a, "b": fit.b, "max_residual": max(abs(r) for r in fit.residuals), "n_seeds": len(ests[0].per_sample)}]
    run.csv("table.csv", table)
    run.summary.append(f"phi extrapolated a = {fit.a:.6f}, b = {fit.b:.6f}")


def _phi1(run: Run, P: dict, seeds):
    res = run.task("phi1_limit", phi1_limit, make_kernel(P["kernel"]), P["M_list"], primitive(P["nu"]), P["t"])
    run.csv("table.csv", [{"M": m, "phi": f, "per_layer": q, "exact": 4.0 * (m + 1)}
                          for m, f, q in zip(res.M_list, res.phi, res.per_layer)], ["M", "phi", "per_layer", "exact"])
    run.csv("superadditivity.csv", [{"M": a, "M2": b, "phi_sum_layers": c, "phi_M_plus_phi_M2": d, "ok": ok}
                                    for a, b, c, d, ok in res.superadditivity])
    run.summary.append(f"per-layer tension {res.per_layer}; superadditive {res.superadditive}")


def _sweep_rows(res, key: str, target) -> list[dict]:
    rows = []
    for v, e, r, s in zip(res.values, res.estimates, res.ratios, res.ratio_stderr):
        row = {key: v, "phi": e.mean, "phi_stderr": e.stderr, "ratio": r, "ratio_stderr": s}
        if target is not None:
            row.update({"target": target, "gap": abs(r - target)})
        rows.append(row)
    return rows


def _linear_law(run: Run, P: dict, seeds):
    k = make_kernel(P["kernel"])
    nu = primitive(P["nu"])
    res = run.task("linear_law", linear_law, P["p"], P["M_list"], nu, k, seeds, P["t"], run.threads)
    rows = []
    for M, e in zip(res.values, res.estimates):
        rows += _tension_rows(nu, "deposition", P["p"], M, k.eta, e)
    run.csv("samples.csv", rows, TENSION_COLUMNS)
    run.csv("table.csv", _sweep_rows(res, "M", res.target))
    run.summary.append(f"ratios {[round(r, 4) for r in res.ratios]} target {res.target}; "
                       f"monotone trending {res.fit['monotone_trending']}")


def _percolation(run: Run, P: dict, seeds):
    k = make_kernel(P["kernel"])
    nu = primitive(P["nu"])
    ctrl = P["control"]
    res = run.task("percolation_regime", percolation_regime, P["p"], P["M"], P["eta_list"], nu, k, seeds, P["t"],
                   P["p_site"], (ctrl["p"], ctrl["M"]) if ctrl else None, run.threads)
    rows = []
    for eta, e in zip(res.values, res.estimates):
        rows += _tension_rows(nu, "deposition", P["p"], P["M"], eta, e)
    run.csv("samples.csv", rows, TENSION_COLUMNS)
    run.csv("table.csv", _sweep_rows(res, "eta", None))
    run.summary.append(f"q = {res.extra['q']:.4f} (percolating {res.extra['percolating']}); "
                       f"ratio spread {res.fit['ratio_spread']:.4f}")
    if ctrl:
        c = res.extra["control"]
        run.csv("control.csv", [c], ["p", "M", "q", "eta", "phi", "stderr"])
        run.summary.append(f"control p={c['p']} M={c['M']}: phi = {c['phi']:.4f}")
    vac = P["vacant"]
    if vac and vac["count"] > 0:
        vrows = []
        for s in range(vac["base"], vac["base"] + vac["count"]):
            c = run.task(f"vacant seed={s}", vacant_path_certificate, P["p"], P["M"], vac["N"], s, k.with_eta(None))
            vrows.append({"seed": s, "found": c.found, "path_length": len(c.path) if c.found else 0,
                          "deposited_energy": c.deposited_energy, "certified": c.certified})
        run.csv("vacant.csv", vrows, ["seed", "found", "path_length", "deposited_energy", "certified"])
        run.summary.append(f"vacant paths certified {sum(r['certified'] for r in vrows)}/{len(vrows)} at N={vac['N']}")


def _large_m(run: Run, P: dict, seeds):
    k = make_kernel(P["kernel"])
    nu = primitive(P["nu"])
    res = run.task("largeM_limit", largeM_limit, P["p"], P["eta_list"], P["M_list"], nu, k, seeds, P["t"], run.threads)
    rows = []
    for (eta, M), e in zip(res.values, res.estimates):
        rows += _tension_rows(nu, "deposition", P["p"], M, eta, e)
    run.csv("samples.csv", rows, TENSION_COLUMNS)
    table = []
    for (eta, M), e, r, s in zip(res.values, res.estimates, res.ratios, res.ratio_stderr):
        table.append({"eta": eta, "M": M, "phi": e.mean, "phi_stderr": e.stderr, "ratio": r, "ratio_stderr": s,
                      "target": res.target, "gap": abs(r - res.target)})
    run.csv("table.csv", table)
    run.summary.append(f"ratios {[round(r, 4) for r in res.ratios]} target {res.target}")


def _planelike(run: Run, P: dict, seeds):
    from .planelike import (PlanelikeAbort, RationalDirection, certify_planelike, check_birkhoff,
                            check_no_symmetry_breaking, fit_width_constant, shift_set)
    k = make_kernel(P["kernel"])
    rows = []
    seed0 = seeds[0] if seeds else 0
    for nu in P["nu_list"]:
        d = RationalDirection(tuple(nu))
        widths = []
        for M in P["M_list"]:
            tag = f"nu={d.nu_int[0]}_{d.nu_int[1]} M={M}"
            try:
                u, w, cert = run.task(tag, certify_planelike, d, M, k, n_audits=P["n_audits"], seed=seed0)
            except TaskError as e:
                if isinstance(e.__cause__, PlanelikeAbort):
                    run.text(f"cert_{d.nu_int[0]}_{d.nu_int[1]}_M{M}.json", e.__cause__.certificate.to_json())
                raise
            b = check_birkhoff(u, shift_set(P["shift_radius"]))
            ns = check_no_symmetry_breaking(d, 0.0, cert.lam, M, k, P["m_list"])
            name = f"{d.nu_int[0]}_{d.nu_int[1]}_M{M}"
            run.text(f"cert_{name}.json", cert.to_json())
            run.text(f"dump_{name}.txt", u.dump_text())
            widths.append(w)
            rows.append({"nu1": d.nu_int[0], "nu2": d.nu_int[1], "M": M, "lambda": cert.lam, "lambda_meas": w,
                         "energy": u.energy, "birkhoff": b.ok, "no_symmetry_breaking": ns.ok,
                         "widened_minimizer": all(x["is_minimizer"] for x in cert.widened),
                         "n_audits": len(cert.audits), "max_improvement": cert.max_improvement})
        fit = fit_width_constant(P["M_list"], widths)
        run.summary.append(f"nu={d.nu_int}: lambda_meas/(M+1) fit C = {fit['C']:.4f}, superlinear {fit['superlinear']}")
    run.csv("table.csv", rows)


def _audit(run: Run, P: dict, seeds):
    k = make_kernel(P["kernel"])
    nu = primitive(P["nu"])
    rows = []
    widths = [float(w) for w in P["widths"]]
    spec = CellProblemSpec(nu, P["t"], k, LatticeSource("deposition", P["M"], P["p"]), max(widths))
    for s in seeds:
        rep = run.task(f"monotonicity seed={s}", eta_trace_monotonicity, spec, widths, s)
        rows.append({"audit": "trace_monotonicity", "seed": s, "value": rep.values[-1], "ok": rep.ok})
    side = float(P["t"]) * 2
    Q = OrientedRect.cube(nu, side)
    width = 2 * k.range_L
    for s in seeds:
        shift = (uniforms(s, 0, 0, 0)[()] - 0.5) * 2.0
        cubes = strip_partition(nu, side, P["pieces"], shift=shift, inset=width + 1)
        lat = generate_deposition(DepositionParams(P["p"], P["M"], Q.int_region(pad=width + k.range_L), s))
        rep = run.task(f"subadditivity seed={s}", subadditivity_audit, nu, Q, cubes, lat, k, width)
        rows.append({"audit": "subadditivity", "seed": s, "value": rep.empirical_constant, "ok": rep.holds})
    run.csv("table.csv", rows, ["audit", "seed", "value", "ok"])
    run.summary.append(f"{sum(r['ok'] for r in rows)}/{len(rows)} audits passed")


RUNNERS = {"lattice-gen": _lattice_gen, "groundstate": _groundstate, "tension": _tension, "phi1": _phi1,
           "linear-law": _linear_law, "percolation": _percolation, "large-m": _large_m, "planelike": _planelike,
           "audit": _audit}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_config(cfg: dict, threads: int | None = None, flags: dict | None = None) -> Path:
    """Execute a resolved config; returns the output directory."""
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    threads = default_threads() if threads is None else threads
    run = Run(cfg, out, threads)
    started = _now()
    status, error = "ok", None
    try:
        RUNNERS[cfg["experiment"]](run, cfg["params"], cfg["seeds"])
    except TaskError as e:
        status, error = "failed", {"task": e.task, "error": str(e)}
    except (ValueError, ArithmeticError) as e:
        # parameter validation outside any named task
        run.tasks.append({"task": "setup", "status": "failed", "runtime_s": 0.0, "error": repr(e)})
        status, error = "failed", {"task": "setup", "error": repr(e)}
    run.text("summary.txt", f"experiment {cfg['experiment']}\n" + "\n".join(run.summary) + "\n")
    run.text("config.resolved.json", json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    manifest = {
        "experiment": cfg["experiment"], "config_hash": config_hash(cfg), "version": __version__,
        "rng": RNG_NAME, "started": started, "finished": _now(), "status": status, "error": error,
        "threads": threads, "flags": flags or {}, "tasks": run.tasks, "files": sorted(run.files),
        "config": cfg,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if error:
        raise TaskError(error["task"], RuntimeError(error["error"]))
    return out


# ---------------------------------------------------------------- summarize


def summarize(result_dir) -> tuple[str, list[str]]:
    """Concatenate every run's table.csv into one text table and emit plot data.

    Returns (table text, skipped directories).
    """
    root = Path(result_dir)
    dirs = sorted({p.parent for p in root.rglob("*.csv")} | {p.parent for p in root.rglob("manifest.json")})
    sections, skipped, plots = [], [], []
    for d in dirs:
        mpath = d / "manifest.json"
        if not mpath.exists():
            skipped.append(str(d))
            continue
        man = json.loads(mpath.read_text())
        tab = d / "table.csv"
        rows = read_csv(tab) if tab.exists() else []
        rel = d.relative_to(root) if d != root else Path(".")
        header = f"## {rel} {man['experiment']} status={man.get('status', '?')}"
        if rows:
            cols = list(rows[0])
            widths = [max(len(c), *(len(r[c]) for r in rows)) for c in cols]
            lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
            lines += ["  ".join(r[c].ljust(w) for c, w in zip(cols, widths)) for r in rows]
        else:
            lines = ["(no table)"]
        sections.append("\n".join([header] + lines))
        for x, y in PLOTS.get(man["experiment"], []):
            if rows and x in rows[0] and y in rows[0]:
                name = f"plot_{str(rel).replace('/', '_').replace('.', 'root')}_{y}_vs_{x}.txt"
                body = f"# {x} {y}\n" + "".join(f"{r[x]} {r[y]}\n" for r in rows)
                (root / name).write_text(body)
                plots.append(name)
    text = "\n\n".join(sections) + ("\n" if sections else "")
    if root.exists():
        (root / "summary_table.txt").write_text(text)
    return text, skipped


# ---------------------------------------------------------------------- main


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thinfilm", description="Thin-film surface tension experiments.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--seed-base", type=int, default=None)
    r.add_argument("--seeds", type=int, default=None, help="number of seeds")
    r.add_argument("--out", default=None)
    r.add_argument("--threads", type=int, default=None, help=f"worker processes (default ${THREADS_ENV} or 1)")
    s = sub.add_parser("summarize", help="aggregate result directories")
    s.add_argument("dir")
    return ap


def _error(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.cmd == "summarize":
        text, skipped = summarize(args.dir)
        for d in skipped:
            print(f"warning: no manifest in {d}, skipped", file=sys.stderr)
        if not text:
            print("warning: no results found", file=sys.stderr)
        sys.stdout.write(text)
        return 0
    try:
        raw = json.loads(Path(args.config).read_text())
        cfg = resolve_config(raw, seed_base=args.seed_base, seeds=args.seeds, out=args.out)
    except ConfigError as e:
        _error("schema", str(e), keys=e.keys)
        return 2
    except (OSError, json.JSONDecodeError) as e:
        _error("config", str(e))
        return 2
    flags = {"seed_base": args.seed_base, "seeds": args.seeds, "out": args.out, "threads": args.threads,
             "env_threads": os.environ.get(THREADS_ENV)}
    try:
        out = run_config(cfg, args.threads, flags)
    except TaskError as e:
        _error("task", str(e), task=e.task)
        return 1
    except Exception as e:
        _error("internal", repr(e), trace=traceback.format_exc(limit=3))
        return 1
    print((out / "summary.txt").read_text(), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
