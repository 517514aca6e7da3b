"""Publication-style batch figures from experiment CSV files.

The renderer is a pure CSV consumer: data rows follow the fixed memtime /
threshold schemas, and analysis overlays (scaling fits, threshold
crossings) are read back from ``# fit:...`` / ``# crossing:...`` comment
lines that the producing pipeline embeds.  Nothing is refitted here, and
styling is fixed, so a given CSV renders to byte-identical output.

Figure kinds
------------
memcurve     median memory time vs width, one series per parameter group
quadfit      log max memory time vs inverse temperature, quadratic and
             linear overlays, residuals-from-linear inset
powerfit     small-size memory time vs width with power-law overlays
biascompare  memory time vs bias; dotted lines for runs without the
             cellular-automaton rule
threshold    crossing estimate p_c vs bias ratio
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("memcurve", "quadfit", "powerfit", "biascompare", "threshold")

_REQUIRED_COLUMNS = {
    "memcurve": {"L", "H", "gamma_z", "zeta", "ca_enabled", "median_T", "ci_low", "ci_high"},
    "quadfit": {"beta", "median_T"},
    "powerfit": {"L", "gamma_z", "median_T", "ci_low", "ci_high"},
    "biascompare": {"L", "H", "zeta", "ca_enabled", "median_T", "ci_low", "ci_high"},
    "threshold": {"L", "H", "p_tot", "zeta_p", "trials", "failures", "fail_rate"},
}


class SchemaError(Exception):
    """Input CSV does not carry what the requested figure needs."""


@dataclass
class FigureSpec:
    kind: str
    inputs: Sequence[str]
    out: str

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}"
            )
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


@dataclass
class TableData:
    """One parsed CSV: data rows plus embedded analysis comments."""

    rows: List[Dict[str, str]]
    fits: List[Dict[str, str]] = field(default_factory=list)
    crossings: List[Dict[str, str]] = field(default_factory=list)
    config: Dict[str, str] = field(default_factory=dict)


def _parse_tagged_comment(line: str) -> Dict[str, str]:
    # "# fit:power-law:series=0.5:exponent=2.1" -> fields after the tag
    parts = line[1:].strip().split(":")
    out = {"_tag": parts[0], "_head": parts[1] if len(parts) > 1 else ""}
    for item in parts[1:]:
        if "=" in item:
            key, _, val = item.partition("=")
            out[key] = val
    return out


def parse_table(path: str) -> TableData:
    with open(path) as fh:
        raw = fh.read()
    data = TableData(rows=[])
    body_lines = []
    for line in raw.splitlines():
        if line.startswith("#"):
            stripped = line[1:].strip()
            if stripped.startswith("fit:"):
                data.fits.append(_parse_tagged_comment(line))
            elif stripped.startswith("crossing:"):
                data.crossings.append(_parse_tagged_comment(line))
            elif "=" in stripped:
                key, _, val = stripped.partition("=")
                data.config[key.strip()] = val.strip()
        elif line.strip():
            body_lines.append(line)
    if not body_lines:
        raise SchemaError(f"{path}: no header row found")
    reader = csv.DictReader(io.StringIO("\n".join(body_lines)))
    data.rows = list(reader)
    if not data.rows:
        raise SchemaError(f"{path}: no data rows")
    return data


def _require_columns(kind: str, table: TableData, path: str) -> None:
    have = set(table.rows[0].keys())
    missing = sorted(_REQUIRED_COLUMNS[kind] - have)
    if missing:
        raise SchemaError(f"{path}: missing columns for {kind}: {', '.join(missing)}")


def _f(row: Dict[str, str], key: str) -> float:
    return float(row[key])


def _yerr(rows: Sequence[Dict[str, str]]) -> np.ndarray:
    med = np.array([_f(r, "median_T") for r in rows])
    lo = np.array([_f(r, "ci_low") for r in rows])
    hi = np.array([_f(r, "ci_high") for r in rows])
    return np.vstack([np.maximum(med - lo, 0.0), np.maximum(hi - med, 0.0)])


_STYLE = {
    "figure.figsize": (5.2, 3.9),
    "figure.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 130,
}

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _series_groups(rows, keys):
    groups: Dict[Tuple[str, ...], List[Dict[str, str]]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    return dict(sorted(groups.items()))


def _fig_memcurve(tables: Sequence[TableData]) -> plt.Figure:
    fig, ax = plt.subplots()
    rows = [r for t in tables for r in t.rows]
    for k, (key, grp) in enumerate(
        _series_groups(rows, ("gamma_z", "zeta", "ca_enabled")).items()
    ):
        grp = sorted(grp, key=lambda r: _f(r, "L"))
        x = [_f(r, "L") for r in grp]
        y = [_f(r, "median_T") for r in grp]
        label = f"rate {key[0]}, bias {key[1]}" + ("" if key[2] in ("1", "True") else ", no CA")
        ax.errorbar(
            x, y, yerr=_yerr(grp), marker="o", ms=3.5, capsize=2,
            color=_COLORS[k % len(_COLORS)], label=label,
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("system width L")
    ax.set_ylabel("median memory time")
    ax.legend(fontsize=7)
    return fig


def _find_fit(tables, model, series=None) -> Optional[Dict[str, str]]:
    for t in tables:
        for f in t.fits:
            if f.get("_head", "").startswith(model) or f.get("_tag") == f"fit:{model}":
                if f["_head"] != model and not f["_head"].startswith(model):
                    continue
                if series is not None and f.get("series") != series:
                    continue
                if series is None and "series" in f and f["series"] not in ("", None):
                    continue
                return f
    return None


def _fig_quadfit(tables: Sequence[TableData]) -> plt.Figure:
    rows = sorted((r for t in tables for r in t.rows), key=lambda r: _f(r, "beta"))
    beta = np.array([_f(r, "beta") for r in rows])
    tmax = np.array([_f(r, "median_T") for r in rows])
    quad = _find_fit(tables, "quadratic-exponential")
    lin = _find_fit(tables, "linear-exponential")
    if quad is None or lin is None:
        raise SchemaError(
            "quadfit needs embedded quadratic-exponential and linear-exponential fits"
        )
    fig, ax = plt.subplots()
    if {"ci_low", "ci_high"} <= set(rows[0]):
        ax.errorbar(beta, tmax, yerr=_yerr(rows), fmt="o", ms=4, capsize=2, color=_COLORS[0], label="max memory time")
    else:
        ax.plot(beta, tmax, "o", ms=4, color=_COLORS[0], label="max memory time")
    bs = np.linspace(beta.min(), beta.max(), 200)
    a, b, c = (float(quad["a"]), float(quad["b"]), float(quad["c"]))
    ax.plot(bs, np.exp(a * bs**2 + b * bs + c), "-", color=_COLORS[1], label="quadratic fit")
    lb, lc = float(lin["b"]), float(lin["c"])
    ax.plot(bs, np.exp(lb * bs + lc), "--", color=_COLORS[2], label="linear fit")
    ax.set_yscale("log")
    ax.set_xlabel("inverse temperature")
    ax.set_ylabel("max memory time")
    ax.legend(fontsize=7, loc="upper left")
    inset = fig.add_axes([0.62, 0.22, 0.27, 0.24])
    inset.axhline(0.0, color="k", lw=0.6)
    inset.plot(beta, np.log(tmax) - (lb * beta + lc), "o", ms=2.5, color=_COLORS[2])
    inset.set_title("linear-fit residuals", fontsize=6)
    inset.tick_params(labelsize=5)
    return fig


def _fig_powerfit(tables: Sequence[TableData]) -> plt.Figure:
    fig, ax = plt.subplots()
    rows = [r for t in tables for r in t.rows]
    for k, (key, grp) in enumerate(_series_groups(rows, ("gamma_z",)).items()):
        grp = sorted(grp, key=lambda r: _f(r, "L"))
        x = np.array([_f(r, "L") for r in grp])
        y = np.array([_f(r, "median_T") for r in grp])
        color = _COLORS[k % len(_COLORS)]
        ax.errorbar(
            x, y, yerr=_yerr(grp), fmt="o", ms=3.5, capsize=2, color=color,
            label=f"rate {key[0]}",
        )
        fit = _find_fit(tables, "power-law", series=key[0])
        if fit is not None:
            xs = np.linspace(x.min(), x.max(), 100)
            expo = float(fit["exponent"])
            pref = float(fit["log_prefactor"])
            ax.plot(xs, np.exp(pref) * xs**expo, "-", lw=1, color=color)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("system width L")
    ax.set_ylabel("median memory time")
    ax.legend(fontsize=7)
    return fig


def _fig_biascompare(tables: Sequence[TableData]) -> plt.Figure:
    fig, ax = plt.subplots()
    rows = [r for t in tables for r in t.rows]
    finite = [r for r in rows if not math.isinf(float(r["zeta"]))]
    if not finite:
        raise SchemaError("biascompare needs rows at finite bias")
    for k, (key, grp) in enumerate(_series_groups(finite, ("L", "H", "ca_enabled")).items()):
        grp = sorted(grp, key=lambda r: _f(r, "zeta"))
        x = [_f(r, "zeta") for r in grp]
        y = [_f(r, "median_T") for r in grp]
        ca_on = key[2] in ("1", "True")
        ax.errorbar(
            x, y, yerr=_yerr(grp), marker="o", ms=3, capsize=2,
            linestyle="-" if ca_on else ":",
            color=_COLORS[k % len(_COLORS)],
            label=f"{key[0]}x{key[1]}" + ("" if ca_on else " (no CA)"),
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("bias ratio")
    ax.set_ylabel("median memory time")
    ax.legend(fontsize=7)
    return fig


def _fig_threshold(tables: Sequence[TableData]) -> plt.Figure:
    points = []
    for t in tables:
        for cr in t.crossings:
            points.append(
                (
                    float(cr["zeta_p"]),
                    float(cr["p_c"]),
                    float(cr.get("ci_low", cr["p_c"])),
                    float(cr.get("ci_high", cr["p_c"])),
                )
            )
    if not points:
        raise SchemaError("threshold figure needs embedded crossing estimates")
    points.sort()
    zp = np.array([p[0] for p in points])
    pc = np.array([p[1] for p in points])
    lo = np.array([p[2] for p in points])
    hi = np.array([p[3] for p in points])
    fig, ax = plt.subplots()
    ax.errorbar(
        zp, pc, yerr=np.vstack([np.maximum(pc - lo, 0), np.maximum(hi - pc, 0)]),
        fmt="o-", ms=4, capsize=3, color=_COLORS[0],
    )
    ax.set_xscale("log")
    ax.set_xlabel("bias ratio of error probabilities")
    ax.set_ylabel("threshold error probability")
    return fig


_BUILDERS = {
    "memcurve": _fig_memcurve,
    "quadfit": _fig_quadfit,
    "powerfit": _fig_powerfit,
    "biascompare": _fig_biascompare,
    "threshold": _fig_threshold,
}


def build_figure(spec: FigureSpec) -> plt.Figure:
    tables = []
    for path in spec.inputs:
        table = parse_table(path)
        _require_columns(spec.kind, table, path)
        tables.append(table)
    with plt.rc_context(_STYLE):
        return _BUILDERS[spec.kind](tables)


def render(spec: FigureSpec) -> str:
    """Render the figure to spec.out (png or svg); returns the path."""
    fig = build_figure(spec)
    try:
        # strip volatile metadata so identical inputs give identical bytes
        if spec.out.endswith(".svg"):
            fig.savefig(spec.out, metadata={"Date": None})
        else:
            fig.savefig(spec.out)
    finally:
        plt.close(fig)
    return spec.out
