"""Scenario configuration files and CSV output.

Config files are JSON objects whose keys mirror ``ScenarioConfig``; an
optional ``tolerances`` object mirrors ``Tolerances``.  Unknown keys are
rejected.  Example::

    {"name": "mild", "R": 1.2, "upsilon_target": 1.0, "n_modes": 4,
     "tolerances": {"ode_rel": 1e-12, "ode_abs": 1e-12}}

Floats are written with ``repr`` so files round-trip exactly and identical
runs produce identical bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from ..model import PRESETS, ScenarioConfig, Tolerances
from .runner import BasisStudyRow, ErrorReport, RunResult


class ConfigError(ValueError):
    pass


def _strict(cls, data: dict, where: str):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario config must be a JSON object")
    _strict(ScenarioConfig, data, "scenario")
    data = dict(data)
    tol = data.pop("tolerances", None)
    if tol is not None:
        if not isinstance(tol, dict):
            raise ConfigError("'tolerances' must be an object")
        _strict(Tolerances, tol, "tolerances")
        data["tolerances"] = Tolerances(**tol)
    try:
        return ScenarioConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)


def load_scenario(spec: str) -> ScenarioConfig:
    """Preset name or path to a JSON config file."""
    if spec in PRESETS:
        return PRESETS[spec]
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"{spec!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = config_from_dict(data)
    return cfg if "name" in data else cfg.replace(name=path.stem)


def config_hash(cfg: ScenarioConfig, **extra) -> str:
    payload = json.dumps({"config": config_to_dict(cfg), **extra}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if math.isfinite(x) else str(float(x))
    return str(x)


def _write(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


RUNS_HEADER = [
    "run_id", "scenario", "method", "n_modes", "config_hash", "failed", "diagnostic",
    "max_rel_n_err", "max_rel_rho_err", "max_L1_err", "final_L1_err", "switch_time",
    "steps_accepted", "steps_rejected", "mode_coeff_err",
]


def _run_row(rep: ErrorReport, chash: str):
    modes = ";".join(fmt(v) for v in rep.mode_coeff_err)
    return [rep.run_id, rep.scenario, rep.method.value, rep.n_modes, chash, rep.failed, rep.diagnostic,
            rep.max_rel_n_err, rep.max_rel_rho_err, rep.max_L1_err, rep.final_L1_err, rep.switch_time,
            rep.steps_accepted, rep.steps_rejected, modes]


def write_runs(out: Path, results: list[RunResult], cfg: ScenarioConfig) -> Path:
    """Rewrite ``runs.csv``, keeping earlier rows that these results do not replace."""
    path = Path(out) / "runs.csv"
    rows = {}
    if path.exists():
        with path.open(newline="") as fh:
            for r in csv.DictReader(fh):
                rows[r["run_id"]] = [r.get(h, "") for h in RUNS_HEADER]
    for res in results:
        rep = res.report
        chash = config_hash(cfg.replace(n_modes=rep.n_modes), method=rep.method.value)
        rows[rep.run_id] = [fmt(v) for v in _run_row(rep, chash)]
    _write(path, RUNS_HEADER, [rows[k] for k in sorted(rows)])
    return path


def write_trajectory(out: Path, res: RunResult) -> Path | None:
    traj, rep = res.trajectory, res.report
    if traj is None:
        return None
    path = Path(out) / f"trajectory_{rep.run_id}.csv"
    if hasattr(traj, "upsilon"):
        header = ["t", "T", "upsilon", "eps", "K", "n", "rho"] + [f"b{k}" for k in range(2, traj.degree + 1)]
        rows = (
            [traj.times[i], traj.T[i], traj.upsilon[i], traj.eps[i], traj.K[i], traj.n[i], traj.rho[i],
             *traj.b[i]]
            for i in range(len(traj.times))
        )
    else:
        header = ["t", "n", "rho"] + [f"d{k}" for k in range(traj.n_modes)]
        rows = ([traj.times[i], traj.n[i], traj.rho[i], *traj.d[i]] for i in range(len(traj.times)))
    _write(path, header, rows)
    return path


def write_series(out: Path, res: RunResult) -> Path | None:
    rep = res.report
    if rep.failed or len(rep.L1_err_vs_time) == 0:
        return None
    path = Path(out) / f"series_{rep.run_id}.csv"
    _write(path, ["t", "L1_err"], zip(rep.times, rep.L1_err_vs_time))
    return path


def write_results(out: Path, results: list[RunResult], cfg: ScenarioConfig) -> list[Path]:
    paths = [write_runs(out, results, cfg)]
    for res in results:
        paths += [p for p in (write_trajectory(out, res), write_series(out, res)) if p is not None]
    return paths


def write_basis_study(out: Path, rows: list[BasisStudyRow]) -> Path:
    path = Path(out) / "basis_study.csv"
    flat = []
    for r in rows:
        for k, N in enumerate(r.n_modes):
            # error of the N-term sum; coeff_hat of its last mode n = N - 1
            flat.append([r.upsilon, r.R, r.basis, N, r.error[k], k, r.coeff_hat[k], r.diverges])
    _write(path, ["upsilon", "R", "basis", "N", "L1_err", "mode", "coeff_hat", "diverges"], flat)
    return path


def read_csv(path: Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
