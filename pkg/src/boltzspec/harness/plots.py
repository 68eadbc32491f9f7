"""SVG figures re-rendered from the CSV outputs of a run directory.

Every SVG carries a ``<!-- config-hash: ... -->`` comment identifying the
configurations that produced the plotted rows.
"""

from __future__ import annotations

import hashlib
import io as _io
import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .io import read_csv  # noqa: E402

plt.rcParams["svg.hashsalt"] = "boltzspec"


def _float(s: str) -> float:
    return float(s) if s not in ("", None) else math.nan


def combined_hash(hashes) -> str:
    return hashlib.sha256("\n".join(sorted(set(hashes))).encode()).hexdigest()[:16]


def save_svg(fig, path: Path, chash: str) -> Path:
    buf = _io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    text = buf.getvalue()
    comment = f"<!-- config-hash: {chash} -->\n"
    head, sep, rest = text.partition("?>\n")
    text = head + sep + comment + rest if sep else comment + text
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def plot_error_vs_modes(rows: list[dict], scenario: str, out: Path) -> Path:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    keys = [("max_rel_n_err", "max rel. error in n"), ("max_rel_rho_err", "max rel. error in rho"),
            ("max_L1_err", "max L1 error ratio")]
    by_method = defaultdict(list)
    for r in rows:
        if r["failed"] != "true":
            by_method[r["method"]].append(r)
    for ax, (key, label) in zip(axes, keys):
        for method, rs in sorted(by_method.items()):
            rs = sorted(rs, key=lambda r: int(r["n_modes"]))
            ax.semilogy([int(r["n_modes"]) for r in rs], [max(_float(r[key]), 1e-17) for r in rs], "o-",
                        label=method)
        ax.set_xlabel("modes N")
        ax.set_title(label)
        ax.legend()
    fig.suptitle(scenario)
    fig.tight_layout()
    return save_svg(fig, out / f"error_vs_modes_{scenario}.svg", combined_hash(r["config_hash"] for r in rows))


def plot_error_vs_time(rows: list[dict], scenario: str, out: Path) -> Path | None:
    fig, ax = plt.subplots(figsize=(6, 4))
    drawn = 0
    for r in sorted(rows, key=lambda r: (r["method"], int(r["n_modes"]))):
        path = out / f"series_{r['run_id']}.csv"
        if not path.exists():
            continue
        series = read_csv(path)
        ax.semilogy([_float(s["t"]) for s in series], [max(_float(s["L1_err"]), 1e-17) for s in series],
                    label=f"{r['method']} N={r['n_modes']}")
        drawn += 1
    if not drawn:
        plt.close(fig)
        return None
    ax.set_xlabel("t")
    ax.set_ylabel("L1 error ratio")
    ax.set_title(scenario)
    ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()
    return save_svg(fig, out / f"error_vs_time_{scenario}.svg", combined_hash(r["config_hash"] for r in rows))


def plot_basis_study(rows: list[dict], out: Path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    groups = defaultdict(list)
    for r in rows:
        groups[(r["basis"], r["upsilon"], r["R"])].append(r)
    for (basis, u, R), rs in sorted(groups.items()):
        rs = sorted(rs, key=lambda r: int(r["N"]))
        tag = f"{basis} Y={u} R={R}" + (" (divergent norm)" if rs[0]["diverges"] == "true" else "")
        style = "o-" if basis == "chemeq" else "s--"
        ax1.semilogy([int(r["N"]) for r in rs], [max(_float(r["L1_err"]), 1e-17) for r in rs], style, label=tag)
        coeffs = [abs(_float(r["coeff_hat"])) for r in rs]
        if not all(math.isnan(c) for c in coeffs):
            ax2.semilogy([int(r["mode"]) for r in rs], [max(c, 1e-17) for c in coeffs], style, label=tag)
    ax1.set_xlabel("modes N")
    ax1.set_ylabel("normalized L1 error")
    ax2.set_xlabel("mode n")
    ax2.set_ylabel("|normalized coefficient|")
    ax1.legend(fontsize="x-small")
    ax2.legend(fontsize="x-small")
    fig.tight_layout()
    chash = combined_hash(f"{k[0]}|{k[1]}|{k[2]}" for k in groups)
    return save_svg(fig, out / "basis_study.svg", chash)


def render_all(out: Path) -> list[Path]:
    """Re-render every figure the CSVs in ``out`` support."""
    out = Path(out)
    written = []
    runs = out / "runs.csv"
    if runs.exists():
        by_scenario = defaultdict(list)
        for r in read_csv(runs):
            by_scenario[r["scenario"]].append(r)
        for scenario, rows in sorted(by_scenario.items()):
            written.append(plot_error_vs_modes(rows, scenario, out))
            p = plot_error_vs_time(rows, scenario, out)
            if p is not None:
                written.append(p)
    study = out / "basis_study.csv"
    if study.exists():
        written.append(plot_basis_study(read_csv(study), out))
    return written
