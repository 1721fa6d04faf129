"""Command-line driver: solver runs, case reproductions, CSV artifacts.

Every run writes its artifacts into ``--out`` and finishes with a
``manifest.json`` listing each emitted file with size and SHA-256, the
resolved configuration, and wall-clock timings.  Numeric CSV cells use 17
significant digits, so reruns with the same config and seed are bit-identical
and the values round-trip exactly.

Exit codes: 0 on success, 1 when a solver returns without reaching its
tolerance (artifacts are still written), 2 for configuration or runtime
errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import _CASES, RunConfig, build_problem, load_config, parse_horizons
from .coupled import solve_finite_horizon, solve_scaled, turnpike_distances, unscale
from .errors import CondControlError
from .fp import fp_forward_sweep
from .grid import Grid, centered_gradient
from .hamiltonian import truncate
from .montecarlo import simulate_killed
from .stationary import solve_stationary

MAX_FIELD_SLICES = 11


# ------------------------------------------------------------- CSV output


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else _fmt(c) for c in row) + "\n")
    return path


def _slice_indices(n_t: int) -> np.ndarray:
    return np.unique(np.round(np.linspace(0, n_t, min(MAX_FIELD_SLICES, n_t + 1))).astype(int))


def _field_header(dim: int):
    return (["t", "x", "p", "u", "b"] if dim == 1 else ["t", "x", "y", "p", "u", "bx", "by"])


def _field_rows(grid: Grid, times_and_slices):
    """Yield fields.csv rows; each item is (t, p_slice, u_slice, b_slice)."""
    coords = np.meshgrid(*grid.xs, indexing="ij") if grid.dim == 2 else [grid.xs[0]]
    for t, p, u, b in times_and_slices:
        flat = [c.ravel() for c in coords]
        for i in range(p.size):
            row = [t] + [c[i] for c in flat] + [p.ravel()[i], u.ravel()[i]]
            row += [b[..., a].ravel()[i] for a in range(grid.dim)]
            yield row


def _finite_field_rows(grid, P, U, B):
    for n in _slice_indices(grid.n_t):
        b = B.values[min(n, grid.n_t - 1)]
        yield grid.times[n], P.values[n], U.values[n], b


def _write_finite_outputs(out: Path, grid, res) -> list[Path]:
    files = [
        _write_csv(out / "fields.csv", _field_header(grid.dim),
                   _field_rows(grid, _finite_field_rows(grid, res.P, res.U, res.B))),
        _write_csv(out / "mass.csv", ["t", "mass"],
                   zip(grid.times, res.masses)),
        _write_csv(out / "iters.csv", ["k", "l2_gap_p", "l2_gap_u", "energy_pairing"],
                   ((str(k + 1), gp, gu, pr) for k, (gp, gu, pr) in
                    enumerate(zip(res.gaps_p, res.gaps_u, res.pairing)))),
    ]
    return files


# ---------------------------------------------------------------- drivers


def _solver_kwargs(cfg: RunConfig) -> dict:
    return dict(theta=cfg.theta, tol=cfg.tol_fixed_point,
                max_iters=cfg.max_iters, tol_newton=cfg.tol_newton)


def _cmd_solve_finite(cfg: RunConfig, out: Path) -> tuple[int, list[Path], dict]:
    spec, grid = build_problem(cfg)
    t0 = time.perf_counter()
    res = solve_finite_horizon(spec, grid, **_solver_kwargs(cfg))
    timing = {"solve": time.perf_counter() - t0}
    files = _write_finite_outputs(out, grid, res)
    return (0 if res.converged else 1), files, timing


def _cmd_solve_scaled(cfg: RunConfig, out: Path) -> tuple[int, list[Path], dict]:
    spec, grid = build_problem(cfg)
    timing = {}
    gamma = cfg.gamma
    if gamma is None:
        t0 = time.perf_counter()
        st = solve_stationary(spec, Grid(grid.x_max, grid.n_h), **_solver_kwargs(cfg))
        timing["stationary"] = time.perf_counter() - t0
        gamma = st.lam
        cfg.gamma = gamma  # surfaces the resolved rate in the manifest
    t0 = time.perf_counter()
    res = solve_scaled(spec, grid, gamma, **_solver_kwargs(cfg))
    timing["solve"] = time.perf_counter() - t0
    P, U = unscale(res.P, res.U, gamma)
    phys = type(res)(P, U, res.B, res.converged, res.iterations, res.gaps_p,
                     res.gaps_u, res.pairing, res.thetas, gamma=gamma)
    files = _write_finite_outputs(out, grid, phys)
    return (0 if res.converged else 1), files, timing


def _stationary_outputs(out: Path, grid, spec, st) -> list[Path]:
    b = truncate(centered_gradient(grid, st.u.values), spec.M, axis=-1)
    rows = _field_rows(grid, [(0.0, st.p.values, st.u.values, b)])
    return [
        _write_csv(out / "fields.csv", _field_header(grid.dim), rows),
        _write_csv(out / "eigen.csv", ["lambda", "residual"],
                   [(st.lam, st.eigen_residual)]),
        _write_csv(out / "iters.csv", ["k", "l2_gap_p", "l2_gap_u", "energy_pairing"],
                   ((str(k + 1), gp, gu, pr) for k, (gp, gu, pr) in
                    enumerate(zip(st.gaps_p, st.gaps_u, st.pairings)))),
    ]


def _cmd_solve_stationary(cfg: RunConfig, out: Path) -> tuple[int, list[Path], dict]:
    spec, grid_t = build_problem(cfg)
    grid = Grid(grid_t.x_max, grid_t.n_h)
    t0 = time.perf_counter()
    st = solve_stationary(spec, grid, **_solver_kwargs(cfg))
    timing = {"solve": time.perf_counter() - t0}
    files = _stationary_outputs(out, grid, spec, st)
    return (0 if st.converged else 1), files, timing


def _cmd_turnpike(cfg: RunConfig, out: Path) -> tuple[int, list[Path], dict]:
    spec, grid_t = build_problem(cfg)
    space = Grid(grid_t.x_max, grid_t.n_h)
    timing = {}
    t0 = time.perf_counter()
    st = solve_stationary(spec, space, **_solver_kwargs(cfg))
    timing["stationary"] = time.perf_counter() - t0
    dt = grid_t.dt

    def one_horizon(T):
        n_t = max(1, round(T / dt))
        grid = Grid(space.x_max, space.n_h, T=T, n_t=n_t)
        res = solve_finite_horizon(spec.with_horizon(T), grid, **_solver_kwargs(cfg))
        times, dist_p, dist_u = turnpike_distances(res.P, res.U, st)
        return res.converged, times, dist_p, dist_u

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=len(cfg.horizons)) as pool:
        results = list(pool.map(one_horizon, cfg.horizons))
    timing["horizons"] = time.perf_counter() - t0

    rows = []
    all_ok = st.converged
    for T, (ok, times, dist_p, dist_u) in zip(cfg.horizons, results):
        all_ok &= ok
        rows.extend((T, t, dp, du) for t, dp, du in zip(times, dist_p, dist_u))
    files = [
        _write_csv(out / "distances.csv", ["horizon", "t", "dist_p", "dist_u"], rows),
        _write_csv(out / "eigen.csv", ["lambda", "residual"],
                   [(st.lam, st.eigen_residual)]),
    ]
    return (0 if all_ok else 1), files, timing


def _cmd_mc_validate(cfg: RunConfig, out: Path) -> tuple[int, list[Path], dict]:
    spec, grid = build_problem(cfg)
    timing = {}
    t0 = time.perf_counter()
    P = fp_forward_sweep(spec, grid, np.zeros((grid.n_t + 1,) + grid.shape))
    timing["pde"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    est = simulate_killed(spec, grid, None, n_paths=cfg.n_paths, dt=cfg.mc_dt,
                          seed=cfg.seed)
    timing["mc"] = time.perf_counter() - t0
    files = [
        _write_csv(out / "mass.csv", ["t", "mass"], zip(grid.times, P.masses())),
        _write_csv(out / "survival.csv", ["t", "p_hat", "stderr"],
                   zip(est.times, est.survival, est.stderr)),
    ]
    return 0, files, timing


def _cmd_case(cfg: RunConfig, out: Path) -> tuple[int, list[Path], dict]:
    if cfg.case == 5:
        return _cmd_solve_stationary(cfg, out)
    return _cmd_solve_finite(cfg, out)


_DISPATCH = {
    "solve-finite": _cmd_solve_finite,
    "solve-stationary": _cmd_solve_stationary,
    "solve-scaled": _cmd_solve_scaled,
    "turnpike": _cmd_turnpike,
    "mc-validate": _cmd_mc_validate,
    "case": _cmd_case,
}


# ------------------------------------------------------------- entrypoint


def _write_manifest(out: Path, command: str, cfg: RunConfig,
                    files: list[Path], timing: dict) -> None:
    inventory = []
    for path in sorted(files):
        data = path.read_bytes()
        inventory.append({
            "name": path.name,
            "bytes": len(data),
            "sha256": hashlib.sha256(data).hexdigest(),
        })
    payload = {
        "command": command,
        "case": cfg.case,
        "config": cfg.to_dict(),
        "out_dir": str(out),
        "files": inventory,
        "timings_s": {k: round(v, 3) for k, v in timing.items()},
    }
    (out / "manifest.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condcontrol",
        description="Solvers for diffusions controlled under survival "
                    "conditioning, with CSV artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "solve-finite": "coupled forward/backward solve on [0, T]",
        "solve-stationary": "long-run eigenvalue system",
        "solve-scaled": "growth-compensated solve (gamma from flag, config, "
                        "or a stationary pre-solve)",
        "turnpike": "distance-to-stationary curves over several horizons",
        "mc-validate": "killed-path Monte Carlo against the drift-free density",
        "case": "run a preset (1-5; 2d-a/2d-b alias the 2D presets 3/4)",
    }
    for name, desc in descriptions.items():
        sp = sub.add_parser(name, help=desc, description=desc)
        if name == "case":
            sp.add_argument("id", choices=sorted(_CASES), help="preset identifier")
        sp.add_argument("--config", type=Path, help="YAML config file")
        sp.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory (created if missing)")
        sp.add_argument("--seed", type=int, help="Monte Carlo seed")
        sp.add_argument("--theta", type=float, help="relaxation weight in (0, 1]")
        sp.add_argument("--tol", type=float, help="fixed-point tolerance")
        sp.add_argument("--max-iters", type=int, help="outer iteration budget")
        sp.add_argument("--gamma", type=float, help="growth-compensation rate")
        sp.add_argument("--horizons", type=str, help="comma-separated horizons")
        sp.add_argument("--cost-sign", choices=["printed", "figure"],
                        help="sign convention inside the cost bumps")
    return parser


def _apply_flags(cfg: RunConfig, args: argparse.Namespace) -> None:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.theta is not None:
        cfg.theta = args.theta
    if args.tol is not None:
        cfg.tol_fixed_point = args.tol
    if args.max_iters is not None:
        cfg.max_iters = args.max_iters
    if args.gamma is not None:
        cfg.gamma = args.gamma
    if args.horizons is not None:
        cfg.horizons = parse_horizons(args.horizons)
    if args.cost_sign is not None:
        cfg.cost_sign = args.cost_sign
    if getattr(args, "id", None) is not None:
        cfg.case = _CASES[args.id]


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        _apply_flags(cfg, args)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        code, files, timing = _DISPATCH[args.command](cfg, out)
        _write_manifest(out, args.command, cfg, files, timing)
        for path in [*files, out / "manifest.json"]:
            print(f"wrote {path}")
        if code != 0:
            print("warning: solver stopped before reaching tolerance", file=sys.stderr)
        return code
    except CondControlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
