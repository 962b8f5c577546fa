"""Command-line entry point: config-driven pipelines writing artifact directories.

    breather-lab <pipeline> --config run.json [--override key=value ...] [--quiet|--verbose]

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 acceptance failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .grid import Grid, GridError
from .model import REGISTRY, BreatherParams, breather_state, make_model

log = logging.getLogger("breather_lab")

PIPELINES = ("evolve", "solve", "sweep", "analyze", "fermi", "accept")
OUTPUT_ROOT_ENV = "BREATHER_LAB_OUTPUT_ROOT"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPT = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    pipeline: str
    model: dict = field(default_factory=lambda: {"name": "sine_gordon", "params": {}})
    grid: dict | None = None                      # {"half_length", "n_points"}; None -> per-eps default
    grid_spacing: float = 0.1
    solver: dict = field(default_factory=dict)    # NewtonConfig fields
    eps_list: list = field(default_factory=lambda: [0.2])
    n_max: int = 8
    output_dir: str = "runs/default"
    seed: int = 12345
    steps_per_period: int = 4096
    scheme: str = "leapfrog"
    input_dir: str | None = None
    workers: int = 2
    L_window: float = 5.0
    criteria: list | None = None

    def validate(self) -> "RunConfig":
        errs = []
        if self.pipeline not in PIPELINES:
            errs.append(f"pipeline: {self.pipeline!r} not in {PIPELINES}")
        if not isinstance(self.model, dict) or self.model.get("name") not in REGISTRY + ("zero",):
            errs.append(f"model.name: must be one of {REGISTRY}")
        else:
            try:
                self.model_spec()
            except (TypeError, ValueError, KeyError) as exc:
                errs.append(f"model.params: {exc}")
        if any(not 0 < float(e) < 1 for e in self.eps_list):
            errs.append("eps_list: every entry must lie in (0, 1)")
        if self.pipeline == "sweep" and any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            errs.append("eps_list: must be strictly decreasing for a sweep")
        if self.pipeline in ("evolve", "solve") and not self.eps_list:
            errs.append("eps_list: need at least one amplitude")
        if self.grid is not None:
            try:
                Grid(float(self.grid["half_length"]), int(self.grid["n_points"]))
            except (KeyError, TypeError, GridError) as exc:
                errs.append(f"grid: {exc}")
        if not self.grid_spacing > 0:
            errs.append("grid_spacing: must be positive")
        try:
            self.newton()
        except (TypeError, ValueError) as exc:
            errs.append(f"solver: {exc}")
        if self.scheme not in ("leapfrog", "strang"):
            errs.append("scheme: must be leapfrog or strang")
        if self.steps_per_period < 64 or self.steps_per_period % 64:
            errs.append("steps_per_period: must be a positive multiple of 64")
        if self.n_max < 2:
            errs.append("n_max: must be at least 2")
        if self.workers < 1:
            errs.append("workers: must be at least 1")
        if self.pipeline == "analyze" and not self.input_dir:
            errs.append("input_dir: required for the analyze pipeline")
        if errs:
            raise ConfigError("; ".join(errs))
        return self

    def model_spec(self):
        return make_model(self.model["name"], **self.model.get("params", {}))

    def newton(self):
        from .solver import NewtonConfig
        return NewtonConfig.from_dict(self.solver)

    def grid_for(self, eps: float) -> Grid:
        if self.grid is not None:
            return Grid(float(self.grid["half_length"]), int(self.grid["n_points"]))
        return Grid.for_amplitude(eps, h=self.grid_spacing)

    def resolved_output(self) -> Path:
        p = Path(self.output_dir)
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not p.is_absolute():
            p = Path(root) / p
        return p

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        if "pipeline" not in d:
            raise ConfigError("pipeline: missing")
        return cls(**d)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc


def apply_override(d: dict, item: str) -> dict:
    """Set a dotted key from 'key=value'; the value is parsed as JSON when possible."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    cur = d
    parts = key.split(".")
    for p in parts[:-1]:
        if cur.get(p) is None:
            cur[p] = {}
        cur = cur[p]
        if not isinstance(cur, dict):
            raise ConfigError(f"override {key!r}: {p!r} is not a mapping")
    cur[parts[-1]] = val
    return d


# -- artifact writing ----------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v


class RunWriter:
    """Single writer for one run directory; records every CSV it writes."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def csv(self, name: str, rows: list[dict], columns: list[str] | None = None) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        columns = columns or (list(rows[0]) if rows else [])
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(r.get(k)) for k in columns})
        self.written.append(name)
        return path

    def json(self, name: str, obj) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable))
        return path

    def text(self, name: str, text: str) -> Path:
        path = self.root / name
        path.write_text(text)
        return path

    def checksums(self) -> dict:
        sums = {n: sha256(self.root / n) for n in sorted(set(self.written))}
        self.json("checksums.json", sums)
        return sums


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    return str(o)


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- pipelines -----------------------------------------------------------------

def _evolve(cfg: RunConfig, out: RunWriter) -> dict:
    from .evolve import EvolveConfig, energy_history, evolve_period, virial_diagnostics
    model = cfg.model_spec()
    rows, virial = [], {}
    for eps in cfg.eps_list:
        p = BreatherParams.from_eps(eps)
        g = cfg.grid_for(eps)
        ec = EvolveConfig.for_period(p.period, cfg.steps_per_period, cfg.scheme)
        s0 = breather_state(p, g)
        traj = evolve_period(s0, model, ec)
        E = energy_history(traj, model)
        phi_gap = float(np.sqrt(g.h * np.sum((traj.phi[-1] - traj.phi[0]) ** 2)))
        phit_gap = float(np.sqrt(g.h * np.sum((traj.phi_t[-1] - traj.phi_t[0]) ** 2)))
        drift = float(abs(E[-1] - E[0]) / abs(E[0]))
        rows.append({"eps": eps, "phi_gap": phi_gap, "phit_gap": phit_gap, "energy_drift": drift,
                     "max_energy_fluctuation": float(np.max(np.abs(E - E[0])) / abs(E[0]))})
        out.csv(f"energy_eps{eps:g}.csv", [{"t": t, "energy": e} for t, e in zip(traj.times, E)])
        virial[f"{eps:g}"] = virial_diagnostics(traj, model).to_dict()
    out.csv("period_gap.csv", rows)
    out.json("virial.json", virial)
    return {"members": len(rows), "worst_phi_gap": max(r["phi_gap"] for r in rows)}


def _solve(cfg: RunConfig, out: RunWriter) -> dict:
    from .solver import newton_solve, save_solution, seed
    eps = float(cfg.eps_list[0])
    p = BreatherParams.from_eps(eps)
    sol = newton_solve(seed(p, cfg.grid_for(eps), cfg.n_max), cfg.model_spec(), cfg.newton())
    sol.eps = eps
    save_solution(sol, out.root / "solution")
    out.written.append("solution/modes.csv")
    out.csv("residual_history.csv", [{"iteration": i, "residual": r} for i, r in enumerate(sol.residual_history)])
    summary = {"eps": eps, "converged": sol.converged, "residual": sol.residual_norm,
               "iterations": sol.newton_iterations, "alpha": sol.alpha, "period": sol.period,
               "message": sol.message}
    if not sol.converged:
        raise NumericalFailure(sol.message, summary)
    return summary


def _analysis_row(sol, model):
    from .decompose import decompose_solution
    from .fermi import golden_rule_report
    from .modes import dominant_split
    row = {"eps": sol.eps, "converged": sol.converged, "alpha": sol.alpha}
    if not sol.converged or not sol.alpha > 0:
        return row, None
    rep = decompose_solution(sol)
    split = dominant_split(sol.stack, sol.alpha)
    gr = golden_rule_report(sol, model, rep)
    row.update({"J": rep.J, "lambda_hat": rep.lambda_hat, "theorem_ii_value": rep.theorem_ii_value,
                "residual_H1": rep.residual_H1, "perp_L2L2": split.perp_L2L2,
                "perp_LinfL2": split.perp_LinfL2, "h3_ratio": sol.diagnostics.get("h3_ratio"),
                "resonance_defect_f": gr.resonance_defect_f, "resonance_defect_g": gr.resonance_defect_g,
                "localization_mass": gr.localization_mass, "limiting_functional": gr.limiting_functional})
    return row, rep


def _decomp_rows(pairs):
    rows = []
    for sol, rep in pairs:
        if rep is None:
            continue
        for j, p in enumerate(rep.profiles):
            rows.append({"eps": sol.eps, "lambda_hat": rep.lambda_hat, "J": rep.J, "j": j, "r": p.r,
                         "theta": p.theta, "residual_H1": rep.residual_H1, "residual_L2": rep.residual_L2,
                         "theorem_ii_value": rep.theorem_ii_value})
    return rows


def _analyze_family(cfg, out, family):
    model = cfg.model_spec()
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(lambda s: _analysis_row(s, model), family))
    rows = [r for r, _ in results]
    out.csv("analysis.csv", rows, columns=_union_columns(rows))
    out.csv("decomposition.csv", _decomp_rows([(s, rep) for s, (_, rep) in zip(family, results)]),
            columns=["eps", "lambda_hat", "J", "j", "r", "theta", "residual_H1", "residual_L2",
                     "theorem_ii_value"])
    ok = [s for s in family if s.converged]
    fit = None
    if len(ok) >= 3:
        from .decompose import fit_lambda
        rep = fit_lambda(ok)
        fit = rep.to_dict()
        out.json("lambda_fit.json", fit)
    return fit


def _union_columns(rows):
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    return cols


def _sweep(cfg: RunConfig, out: RunWriter) -> dict:
    from .solver import continue_family, save_solution
    fam = continue_family(cfg.model_spec(), cfg.eps_list, cfg.newton(), cfg.n_max,
                          grid_factory=cfg.grid_for)
    rows = []
    for s in fam:
        save_solution(s, out.root / f"eps_{s.eps:g}")
        out.written.append(f"eps_{s.eps:g}/modes.csv")
        rows.append({"eps": s.eps, "omega": s.omega, "alpha": s.alpha, "period": s.period,
                     "residual": s.residual_norm, "iterations": s.newton_iterations,
                     "converged": s.converged, "h3_ratio": s.diagnostics.get("h3_ratio"),
                     "message": s.message})
    out.csv("family.csv", rows)
    fit = _analyze_family(cfg, out, fam)
    summary = {"members": len(fam), "converged": sum(s.converged for s in fam),
               "lambda_hat": fit["lambda_hat"] if fit else None}
    if not any(s.converged for s in fam):
        raise NumericalFailure("no member of the sweep converged", summary)
    return summary


def _analyze(cfg: RunConfig, out: RunWriter) -> dict:
    from .solver import load_solution
    src = Path(cfg.input_dir)
    dirs = sorted({p.parent for p in src.rglob("metadata.json") if (p.parent / "modes.csv").exists()})
    if not dirs:
        raise ConfigError(f"input_dir: no saved solutions under {src}")
    fam = [load_solution(d) for d in dirs]
    fam.sort(key=lambda s: -s.eps)
    fit = _analyze_family(cfg, out, fam)
    return {"members": len(fam), "lambda_hat": fit["lambda_hat"] if fit else None}


def _fermi(cfg: RunConfig, out: RunWriter) -> dict:
    from .fermi import golden_rule_report, potentials_table
    model = cfg.model_spec()
    g = cfg.grid if cfg.grid else None
    grid = Grid(float(g["half_length"]), int(g["n_points"])) if g else Grid(40.0, 8001)
    rows = potentials_table([model], grid)
    out.csv("potentials.csv", rows, columns=["name", "cos_integral", "sin_integral", "decay_warning"])
    reports = {}
    if cfg.input_dir:
        from .decompose import decompose_solution
        from .solver import load_solution
        for d in sorted({p.parent for p in Path(cfg.input_dir).rglob("metadata.json")}):
            sol = load_solution(d)
            rep = decompose_solution(sol) if sol.converged else None
            reports[d.name] = golden_rule_report(sol, model, rep, cfg.L_window).to_dict()
        out.json("golden_rule.json", reports)
    return {"cos_integral": rows[0]["cos_integral"], "sin_integral": rows[0]["sin_integral"],
            "reports": len(reports)}


ACCEPT_COLUMNS = ["id", "name", "anchor", "measured", "tolerance", "verdict"]


def _accept(cfg: RunConfig, out: RunWriter) -> dict:
    from .acceptance import run_all
    results = run_all(cfg.criteria)
    for r in results:
        log.warning(r.line()) if not r.passed else log.info(r.line())
    rows = [r.to_dict() for r in results]
    out.csv("acceptance.csv", rows, columns=ACCEPT_COLUMNS)
    out.json("acceptance.json", rows)
    summary = {"passed": sum(r.passed for r in results), "total": len(results),
               "failed": [r.id for r in results if not r.passed]}
    return summary


PIPELINE_FUNCS = {"evolve": _evolve, "solve": _solve, "sweep": _sweep, "analyze": _analyze,
                  "fermi": _fermi, "accept": _accept}


def traceability_report(artifact_dir) -> list[dict]:
    """One row per acceptance check: anchor, measured, tolerance, verdict.

    Missing artifacts give SKIPPED rows; a CSV whose hash disagrees with
    checksums.json is flagged on every row it feeds.
    """
    from .acceptance import ANCHORS
    d = Path(artifact_dir)
    path = d / "acceptance.csv"
    rows = {i: {"id": i, "anchor": a, "measured": "", "tolerance": "", "verdict": "SKIPPED",
                "checksum_ok": None} for i, a in ANCHORS.items()}
    if not path.exists():
        return list(rows.values())
    ok = None
    sums_path = d / "checksums.json"
    if sums_path.exists():
        sums = json.loads(sums_path.read_text())
        if "acceptance.csv" in sums:
            ok = sums["acceptance.csv"] == sha256(path)
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            try:
                i = int(rec["id"])
            except (KeyError, ValueError):
                continue
            rows[i] = {"id": i, "anchor": rec.get("anchor", ANCHORS.get(i, "")),
                       "measured": rec.get("measured", ""), "tolerance": rec.get("tolerance", ""),
                       "verdict": rec.get("verdict", "SKIPPED") if ok is not False else "CHECKSUM_MISMATCH",
                       "checksum_ok": ok}
    return [rows[i] for i in sorted(rows)]


def format_traceability(rows) -> str:
    lines = ["| id | anchor | measured | tolerance | verdict |", "|---|---|---|---|---|"]
    for r in rows:
        lines.append(f"| {r['id']} | {r['anchor']} | {r['measured']} | {r['tolerance']} | {r['verdict']} |")
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig) -> tuple[int, Path]:
    """Execute a pipeline; always leaves metadata.json behind, returns (exit code, run dir)."""
    cfg.validate()
    root = cfg.resolved_output()
    out = RunWriter(root)
    meta = {"config": cfg.to_dict(), "versions": {"breather_lab": __version__, "python": platform.python_version(),
                                                  "numpy": np.__version__, "scipy": scipy.__version__},
            "status": "running"}
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        summary = PIPELINE_FUNCS[cfg.pipeline](cfg, out)
        meta["status"] = "ok"
        if cfg.pipeline == "accept" and summary["failed"]:
            code = EXIT_ACCEPT
            meta["status"] = "acceptance_failed"
    except NumericalFailure as exc:
        summary = exc.args[1] if len(exc.args) > 1 else {}
        meta.update(status="numerical_failure", error=str(exc.args[0]))
        code = EXIT_NUMERIC
    except (FloatingPointError, np.linalg.LinAlgError, RuntimeError, ArithmeticError) as exc:
        summary = {}
        meta.update(status="numerical_failure", error=f"{type(exc).__name__}: {exc}")
        code = EXIT_NUMERIC
    meta["summary"] = summary
    meta["timings"] = {"total_seconds": time.perf_counter() - t0}
    meta["exit_code"] = code
    out.checksums()
    if cfg.pipeline == "accept":
        out.text("traceability.md", format_traceability(traceability_report(root)))
    out.json("metadata.json", meta)
    out.text("summary.txt", _summary_text(cfg, meta))
    return code, root


def _summary_text(cfg, meta) -> str:
    lines = [f"pipeline: {cfg.pipeline}", f"model: {cfg.model.get('name')}", f"status: {meta['status']}"]
    for k, v in (meta.get("summary") or {}).items():
        lines.append(f"{k}: {v}")
    if "error" in meta:
        lines.append(f"error: {meta['error']}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="breather-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="pipeline", required=True)
    for name in PIPELINES:
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted-key override, value parsed as JSON when possible")
        lv = sp.add_mutually_exclusive_group()
        lv.add_argument("--quiet", action="store_true")
        lv.add_argument("--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        d = json.loads(Path(args.config).read_text())
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d["pipeline"] = args.pipeline
        for item in args.override:
            apply_override(d, item)
        cfg = RunConfig.from_dict(d).validate()
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, root = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.quiet:
        print((root / "summary.txt").read_text(), end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
