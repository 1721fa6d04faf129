"""Render solver CSV artifacts into figures.

Every figure kind consumes specific columns of the solver CLI's CSV outputs
and draws with a fixed style, so rendering is a pure function of the input
files: identical CSVs give byte-identical images (within one matplotlib
install).  Nothing here validates numbers — figures are derived artifacts.

Kinds and their inputs:

=========== ==============================  =========================================
kind        inputs                          shows
=========== ==============================  =========================================
evolution   fields.csv                      density/value snapshots over time (1D/2D)
mass        mass.csv                        survival probability, log scale
convergence iters.csv                       fixed-point gap histories
stationary  fields.csv (single time slice)  stationary density, value, drift
turnpike    distances.csv                   distance to the stationary pair per horizon
survival    survival.csv mass.csv           Monte Carlo survival against the PDE mass
=========== ==============================  =========================================
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["PlotJob", "PlotDataError", "FIGURE_KINDS", "render"]

_STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.framealpha": 0.9,
}

#: metadata written into the PNG instead of the library's version banner
_METADATA = {"Software": "condcontrol-plots"}


class PlotDataError(Exception):
    """A CSV input is missing, malformed, or does not fit the figure kind."""


@dataclass(frozen=True)
class PlotJob:
    """One rendering task: a figure kind, its input CSVs, the output path."""

    kind: str
    inputs: tuple[Path, ...]
    output: Path


def _load(path: Path, columns: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Read a CSV into named float columns, verifying the required header."""
    path = Path(path)
    if not path.is_file():
        raise PlotDataError(f"no such file: {path}")
    text = path.read_text().splitlines()
    if not text:
        raise PlotDataError(f"{path.name} is empty (expected a header row)")
    header = [c.strip() for c in text[0].split(",")]
    missing = [c for c in columns if c not in header]
    if missing:
        raise PlotDataError(
            f"{path.name} is missing column(s) {', '.join(missing)} "
            f"(found {', '.join(header)})"
        )
    body = [line for line in text[1:] if line.strip()]
    if not body:
        raise PlotDataError(f"{path.name} has a header but no data rows")
    try:
        data = np.loadtxt(io.StringIO("\n".join(body)), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise PlotDataError(f"{path.name} has non-numeric rows: {exc}") from exc
    if data.shape[1] != len(header):
        raise PlotDataError(
            f"{path.name} rows have {data.shape[1]} fields, header has {len(header)}"
        )
    return {name: data[:, i] for i, name in enumerate(header)}


def _header(path: Path) -> list[str]:
    path = Path(path)
    if not path.is_file():
        raise PlotDataError(f"no such file: {path}")
    with open(path) as fh:
        return [c.strip() for c in fh.readline().split(",")]


def _time_slices(cols, names):
    """Split field columns into per-time-slice blocks, in time order."""
    t = cols["t"]
    out = []
    for tv in np.unique(t):
        sel = t == tv
        out.append((float(tv), {n: cols[n][sel] for n in names}))
    return out


# --------------------------------------------------------------- renderers


def _render_evolution(paths):
    two_d = "y" in _header(paths[0])
    if two_d:
        cols = _load(paths[0], ("t", "x", "y", "p", "u", "bx", "by"))
        slices = _time_slices(cols, ("x", "y", "p", "u"))
        first, last = slices[0], slices[-1]
        fig, axes = plt.subplots(2, 2, figsize=(7.4, 6.2))
        for row, field in enumerate(("p", "u")):
            for col, (tv, s) in enumerate((first, last)):
                ax = axes[row][col]
                xu, yu = np.unique(s["x"]), np.unique(s["y"])
                z = np.full((xu.size, yu.size), np.nan)
                ix = np.searchsorted(xu, s["x"])
                iy = np.searchsorted(yu, s["y"])
                z[ix, iy] = s[field]
                pc = ax.pcolormesh(xu, yu, z.T, shading="nearest")
                fig.colorbar(pc, ax=ax)
                ax.set_title(f"{field} at t = {tv:g}")
                ax.set_xlabel("x")
                ax.set_ylabel("y")
                ax.grid(False)
        return fig

    cols = _load(paths[0], ("t", "x", "p", "u", "b"))
    slices = _time_slices(cols, ("x", "p", "u"))
    fig, (ax_p, ax_u) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    cmap = plt.get_cmap("viridis")
    t_max = max(tv for tv, _ in slices) or 1.0
    for tv, s in slices:
        color = cmap(tv / t_max)
        ax_p.plot(s["x"], s["p"], color=color)
        ax_u.plot(s["x"], s["u"], color=color)
    for ax, name in ((ax_p, "density p"), (ax_u, "value u")):
        ax.set_xlabel("x")
        ax.set_title(f"{name}, t = 0 (dark) to t = {t_max:g} (light)")
    return fig


def _render_mass(paths):
    cols = _load(paths[0], ("t", "mass"))
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(cols["t"], cols["mass"])
    ax.set_xlabel("t")
    ax.set_ylabel("survival probability")
    ax.set_title("mass of the killed-diffusion density")
    return fig


def _render_convergence(paths):
    cols = _load(paths[0], ("k", "l2_gap_p", "l2_gap_u"))
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(cols["k"], cols["l2_gap_p"], marker="o", ms=3, label="density gap")
    ax.semilogy(cols["k"], cols["l2_gap_u"], marker="s", ms=3, label="value gap")
    ax.set_xlabel("fixed-point iteration")
    ax.set_ylabel("successive-iterate l2 gap")
    ax.set_title("coupled-solver convergence")
    ax.legend()
    return fig


def _render_stationary(paths):
    cols = _load(paths[0], ("t", "x", "p", "u", "b"))
    slices = _time_slices(cols, ("x", "p", "u", "b"))
    _, s = slices[0]
    fig, (ax_p, ax_u) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    ax_p.plot(s["x"], s["p"], color="tab:blue")
    ax_p.set_xlabel("x")
    ax_p.set_title("stationary density")
    ax_u.plot(s["x"], s["u"], color="tab:orange", label="value")
    ax_b = ax_u.twinx()
    ax_b.plot(s["x"], s["b"], color="tab:green", ls="--", lw=1.0, label="drift")
    ax_b.grid(False)
    ax_u.set_xlabel("x")
    ax_u.set_title("stationary value and feedback drift")
    handles = ax_u.get_lines() + ax_b.get_lines()
    ax_u.legend(handles, [h.get_label() for h in handles], loc="lower center")
    return fig


def _render_turnpike(paths):
    cols = _load(paths[0], ("horizon", "t", "dist_p", "dist_u"))
    fig, (ax_p, ax_u) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    for T in np.unique(cols["horizon"]):
        sel = cols["horizon"] == T
        frac = cols["t"][sel] / T
        ax_p.semilogy(frac, cols["dist_p"][sel], label=f"T = {T:g}")
        ax_u.semilogy(frac, cols["dist_u"][sel], label=f"T = {T:g}")
    for ax, name in ((ax_p, "density"), (ax_u, "value")):
        ax.set_xlabel("t / T")
        ax.set_title(f"{name} distance to the stationary pair")
        ax.legend()
    return fig


def _render_survival(paths):
    mc = _load(paths[0], ("t", "p_hat", "stderr"))
    pde = _load(paths[1], ("t", "mass"))
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(pde["t"], pde["mass"], color="tab:blue", label="PDE mass")
    ax.errorbar(mc["t"], mc["p_hat"], yerr=3.0 * mc["stderr"], fmt="o", ms=3.5,
                color="tab:red", capsize=2.5, lw=1.0, label="Monte Carlo (3 SE)")
    ax.set_xlabel("t")
    ax.set_ylabel("survival probability")
    ax.set_title("path simulation against the forward solver")
    ax.legend()
    return fig


#: kind -> (how many CSV inputs, what they are, renderer)
FIGURE_KINDS = {
    "evolution": (1, "fields.csv", _render_evolution),
    "mass": (1, "mass.csv", _render_mass),
    "convergence": (1, "iters.csv", _render_convergence),
    "stationary": (1, "fields.csv of a stationary run", _render_stationary),
    "turnpike": (1, "distances.csv", _render_turnpike),
    "survival": (2, "survival.csv mass.csv", _render_survival),
}


def render(job: PlotJob) -> Path:
    """Draw one figure and write it to ``job.output``; returns the path."""
    if job.kind not in FIGURE_KINDS:
        raise PlotDataError(
            f"unknown figure kind {job.kind!r} (expected one of "
            f"{', '.join(sorted(FIGURE_KINDS))})"
        )
    arity, what, fn = FIGURE_KINDS[job.kind]
    if len(job.inputs) != arity:
        raise PlotDataError(
            f"figure kind {job.kind!r} takes {arity} CSV input(s): {what}; "
            f"got {len(job.inputs)}"
        )
    with matplotlib.rc_context(_STYLE):
        fig = fn([Path(p) for p in job.inputs])
        try:
            fig.set_layout_engine("tight")
            out = Path(job.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out, metadata=_METADATA)
        finally:
            plt.close(fig)
    return out
