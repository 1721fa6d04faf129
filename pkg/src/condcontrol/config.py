"""Run configuration: flat YAML key-value files resolved into problem data.

A config either names a preset (``case: 1`` .. ``5``, ``2d-a``, ``2d-b``) or
spells out the problem explicitly; in both forms individual keys override the
preset values.  Bumps (``p0``, ``g_T``, ``f``) are mappings with ``center``,
``width``, ``amplitude`` and ``sign`` entries, where ``width`` is the ``w`` in
``exp(±(x-c)^2 / w^2)``.

Errors carry ``file:line`` positions so a typo in a long config is findable;
the position comes from the YAML node of the offending key.
"""
from __future__ import annotations

import difflib
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .grid import Grid
from .problem import (
    ProblemSpec,
    case_1,
    case_2,
    case_3,
    case_4,
    case_5,
    clipped_bump,
    exp_bump,
    linear_gradient,
)

__all__ = ["BumpConfig", "RunConfig", "load_config", "build_problem"]

_CASES = {"1": 1, "2": 2, "3": 3, "4": 4, "5": 5, "2d-a": 3, "2d-b": 4}

_SCALAR_KEYS = {
    "sigma": float,
    "epsilon": float,
    "M": float,
    "T": float,
    "Nt": int,
    "Nx": int,
    "Ny": int,
    "theta": float,
    "tol_fixed_point": float,
    "tol_newton": float,
    "max_iters": int,
    "gamma": float,
    "seed": int,
    "n_paths": int,
    "mc_dt": float,
    "cost_sign": str,
    "case": str,
    "horizons": str,
}
_BUMP_KEYS = ("p0", "g_T", "f")
_BUMP_FIELDS = {"center": object, "width": float, "amplitude": float, "sign": str}


@dataclass(frozen=True)
class BumpConfig:
    """One Gaussian bump: exp(sign * (x-center)^2 / width^2) * amplitude."""

    center: tuple[float, ...]
    width: float
    amplitude: float = 1.0
    sign: str | None = None  # None: follow the run's cost_sign


@dataclass
class RunConfig:
    """Fully parsed configuration; ``None`` means "not set, use defaults"."""

    case: int | None = None
    sigma: float | None = None
    epsilon: float | None = None
    M: float | None = None
    T: float | None = None
    Nt: int | None = None
    Nx: int | None = None
    Ny: int | None = None
    p0: BumpConfig | None = None
    g_T: BumpConfig | None = None
    f: BumpConfig | None = None
    theta: float = 1.0
    tol_fixed_point: float = 1e-6
    tol_newton: float = 1e-10
    max_iters: int = 500
    gamma: float | None = None
    seed: int = 0
    n_paths: int = 100_000
    mc_dt: float = 1e-4
    cost_sign: str = "figure"
    horizons: tuple[float, ...] = (0.5, 1.0, 2.0)
    source: str = "<defaults>"

    def to_dict(self) -> dict:
        """JSON-ready view of the resolved configuration."""
        out = {}
        for key in (
            "case sigma epsilon M T Nt Nx Ny theta tol_fixed_point tol_newton "
            "max_iters gamma seed n_paths mc_dt cost_sign"
        ).split():
            val = getattr(self, key)
            if val is not None:
                out[key] = val if not isinstance(val, float) or math.isfinite(val) else "inf"
        out["horizons"] = list(self.horizons)
        for key in _BUMP_KEYS:
            bump = getattr(self, key)
            if bump is not None:
                out[key] = {
                    "center": list(bump.center),
                    "width": bump.width,
                    "amplitude": bump.amplitude,
                    "sign": bump.sign,
                }
        return out


def _err(path, node, message) -> ConfigError:
    line = node.start_mark.line + 1 if node is not None else "?"
    return ConfigError(f"{path}:{line}: {message}")


def _scalar(path, key, node, want):
    raw = yaml.safe_load(node.value) if isinstance(node, yaml.ScalarNode) else None
    if isinstance(node, yaml.ScalarNode):
        if want is str:
            return str(node.value)
        if want is float and isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return float(raw)
        if want is int and isinstance(raw, int) and not isinstance(raw, bool):
            return int(raw)
        if want is float and isinstance(raw, str) and raw.strip() in ("inf", ".inf"):
            return math.inf
    raise _err(path, node, f"{key} must be a {want.__name__}, got {node.value!r}"
               if isinstance(node, yaml.ScalarNode)
               else f"{key} must be a plain {want.__name__}")


def _bump(path, key, node) -> BumpConfig:
    if not isinstance(node, yaml.MappingNode):
        raise _err(path, node, f"{key} must be a mapping with center/width entries")
    got = {}
    for k_node, v_node in node.value:
        name = k_node.value
        if name not in _BUMP_FIELDS:
            raise _err(path, k_node, f"unknown {key} entry {name!r} "
                       f"(expected one of {', '.join(_BUMP_FIELDS)})")
        if name == "center":
            val = yaml.safe_load(yaml.serialize(v_node))
            seq = val if isinstance(val, (list, tuple)) else [val]
            try:
                got[name] = tuple(float(c) for c in seq)
            except (TypeError, ValueError):
                raise _err(path, v_node, "center must be a number or [x, y] pair") from None
        elif name == "sign":
            val = str(v_node.value)
            if val not in ("printed", "figure"):
                raise _err(path, v_node, f"sign must be 'printed' or 'figure', got {val!r}")
            got[name] = val
        else:
            got[name] = _scalar(path, f"{key}.{name}", v_node, float)
    if "center" not in got or "width" not in got:
        raise _err(path, node, f"{key} needs at least center and width")
    if got["width"] <= 0:
        raise _err(path, node, f"{key}.width must be positive")
    return BumpConfig(**got)


def load_config(path) -> RunConfig:
    """Parse and validate a YAML config file into a :class:`RunConfig`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else str(path)
        raise ConfigError(f"{where}: not valid YAML: {getattr(exc, 'problem', exc)}") from exc
    if root is None:
        return RunConfig(source=str(path))
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError(f"{path}:1: config must be a key: value mapping")

    cfg = RunConfig(source=str(path))
    seen = set()
    for k_node, v_node in root.value:
        key = k_node.value
        if key in seen:
            raise _err(path, k_node, f"duplicate key {key!r}")
        seen.add(key)
        if key in _BUMP_KEYS or key == "gT":
            setattr(cfg, "g_T" if key == "gT" else key, _bump(path, key, v_node))
        elif key in _SCALAR_KEYS:
            val = _scalar(path, key, v_node, _SCALAR_KEYS[key])
            if key == "case":
                if val not in _CASES:
                    raise _err(path, v_node,
                               f"unknown case {val!r} (expected one of {', '.join(_CASES)})")
                cfg.case = _CASES[val]
            elif key == "cost_sign":
                if val not in ("printed", "figure"):
                    raise _err(path, v_node,
                               f"cost_sign must be 'printed' or 'figure', got {val!r}")
                cfg.cost_sign = val
            elif key == "horizons":
                cfg.horizons = parse_horizons(val, where=f"{path}:{k_node.start_mark.line + 1}")
            else:
                setattr(cfg, key, val)
        else:
            hint = difflib.get_close_matches(key, [*_SCALAR_KEYS, *_BUMP_KEYS], n=1)
            extra = f" (did you mean {hint[0]!r}?)" if hint else ""
            raise _err(path, k_node, f"unknown key {key!r}{extra}")

    for key in ("sigma", "T", "theta", "tol_fixed_point", "tol_newton", "mc_dt"):
        val = getattr(cfg, key)
        if val is not None and val <= 0:
            raise ConfigError(f"{path}: {key} must be positive, got {val}")
    for key in ("Nt", "Nx", "Ny", "max_iters", "n_paths"):
        val = getattr(cfg, key)
        if val is not None and val < 1:
            raise ConfigError(f"{path}: {key} must be at least 1, got {val}")
    if cfg.epsilon is not None and cfg.epsilon < 0:
        raise ConfigError(f"{path}: epsilon must be nonnegative, got {cfg.epsilon}")
    if cfg.M is not None and cfg.M <= 0:
        raise ConfigError(f"{path}: M must be positive, got {cfg.M}")
    return cfg


def parse_horizons(text: str, where: str = "--horizons") -> tuple[float, ...]:
    """Parse a comma-separated list of increasing positive horizons."""
    try:
        vals = tuple(float(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: horizons must be comma-separated numbers") from exc
    if not vals or any(v <= 0 for v in vals) or any(np.diff(vals) <= 0):
        raise ConfigError(f"{where}: horizons must be positive and increasing")
    return vals


def _sign_value(bump_sign: str | None, cost_sign: str) -> float:
    return 1.0 if (bump_sign or cost_sign) == "printed" else -1.0


def _bump_callable(bump: BumpConfig, cost_sign: str, density: bool):
    center = bump.center[0] if len(bump.center) == 1 else bump.center
    sign = _sign_value(bump.sign, cost_sign)
    if density:
        return clipped_bump(center, bump.width**2, cutoff=0.05, sign=sign)
    return exp_bump(center, bump.width**2, amplitude=bump.amplitude, sign=sign)


def build_problem(cfg: RunConfig) -> tuple[ProblemSpec, Grid]:
    """Resolve a configuration into a concrete ``(spec, grid)`` pair.

    Presets come first, explicit keys override them.  Without a preset the
    minimum explicit content is sigma, T, Nt, Nx and a p0 bump; the domain is
    the unit box throughout.
    """
    if cfg.case is not None:
        builders = {1: case_1, 2: case_2, 3: case_3, 4: case_4, 5: case_5}
        builder = builders[cfg.case]
        kwargs = {"cost_sign": cfg.cost_sign}
        if cfg.Nx is not None:
            if cfg.Ny is not None and cfg.Ny != cfg.Nx:
                raise ConfigError("case presets use square grids; set Ny equal to Nx "
                                  "or drop the preset")
            kwargs["h"] = 1.0 / cfg.Nx
        if cfg.case != 5:
            base_spec, base_grid = builder(**kwargs)
            if cfg.T is not None:
                base_spec = base_spec.with_horizon(cfg.T)
            n_t = cfg.Nt if cfg.Nt is not None else (
                base_grid.n_t if cfg.T is None else round(base_spec.T / base_grid.dt)
            )
            grid = Grid(base_grid.x_max, base_grid.n_h, T=base_spec.T, n_t=n_t)
        else:
            base_spec, grid = builder(**kwargs)
            if cfg.T is not None:
                base_spec = base_spec.with_horizon(cfg.T)
            # the preset grid is purely spatial; give it a time axis so the
            # finite-horizon drivers can run this case too
            n_t = cfg.Nt if cfg.Nt is not None else max(1, round(base_spec.T / 1e-3))
            grid = Grid(grid.x_max, grid.n_h, T=base_spec.T, n_t=n_t)
        spec = base_spec
        updates = {}
        for key in ("sigma", "epsilon", "M"):
            if getattr(cfg, key) is not None:
                updates[key] = getattr(cfg, key)
        if updates:
            spec = replace(spec, **updates)
        if cfg.p0 is not None:
            spec = replace(spec, p0=_bump_callable(cfg.p0, cfg.cost_sign, density=True))
        if cfg.g_T is not None:
            spec = replace(spec, G_grad=linear_gradient(
                _bump_callable(cfg.g_T, cfg.cost_sign, density=False)))
        if cfg.f is not None:
            spec = replace(spec, f=_bump_callable(cfg.f, cfg.cost_sign, density=False))
        return spec, grid

    missing = [k for k in ("sigma", "T", "Nt", "Nx") if getattr(cfg, k) is None]
    if missing or cfg.p0 is None:
        wanted = missing + (["p0"] if cfg.p0 is None else [])
        raise ConfigError(f"{cfg.source}: no case preset, so these keys are required: "
                          f"{', '.join(wanted)}")
    dim2 = cfg.Ny is not None
    if dim2 and len(cfg.p0.center) != 2:
        raise ConfigError(f"{cfg.source}: Ny given but p0.center is not an [x, y] pair")
    spec = ProblemSpec(
        sigma=cfg.sigma,
        T=cfg.T,
        p0=_bump_callable(cfg.p0, cfg.cost_sign, density=True),
        epsilon=cfg.epsilon if cfg.epsilon is not None else 0.0,
        M=cfg.M if cfg.M is not None else math.inf,
        f=None if cfg.f is None else _bump_callable(cfg.f, cfg.cost_sign, density=False),
        G_grad=None if cfg.g_T is None else linear_gradient(
            _bump_callable(cfg.g_T, cfg.cost_sign, density=False)),
    )
    grid = (
        Grid((1.0, 1.0), (cfg.Nx, cfg.Ny), T=cfg.T, n_t=cfg.Nt)
        if dim2
        else Grid(1.0, cfg.Nx, T=cfg.T, n_t=cfg.Nt)
    )
    return spec, grid
