"""YAML run configuration with validation and ``key=value`` overrides.

Sections and defaults::

    parameters: {k0p: 1, k0m: 1, k1p: 1, k1m: 1, k2p: 1, k2m: 1,
                 du: 1, dv: 1, dp: 1, dq: 1, z0: 1}
    grid:       {dim: 2, n: 64, length: 1.0}
    model:      {variant: ReGS, epsilon: null, feed: null, lambda: null}
    time:       {dt: 1.0e-3, t_end: 1.0, scheme: strang,
                 diffusion_solver: spectral, sample_every: 10,
                 positivity_floor: 1.0e-12}
    initial:    {kind: equilibrium-perturbation, seed: 0, ...}
    output:     {dir: out, diagnostics: diagnostics.csv, monitor: true,
                 snapshot_every: 0, checkpoint_every: 0,
                 final_snapshot: final.bin}
    sweep:      {eps: [0.1, 0.01, 0.001, 0.0001], workers: 1}
    slow_fast:  {feed: 0.04, u0: 1.0, v0: 0.25, perturbation: 0.01}

``slow_fast`` fixes the initial exchange reservoir ``q0 = k0p feed / lambda``,
so ``feed`` together with ``u0`` sets the ratio ``q0 / u0``.

Only ``grid`` needs to be present; everything else falls back to the
defaults above.
"""
from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .core import Equilibrium, Parameters, State, detailed_balance_equilibrium, trivial_equilibrium
from .grid import GridSpec
from .initial import PERTURBATION_MODES, perturbed_equilibrium, seeded_square
from .stepper import ModelVariant, StepConfig


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


DEFAULTS: dict[str, Any] = {
    "parameters": {
        "k0p": 1.0, "k0m": 1.0, "k1p": 1.0, "k1m": 1.0, "k2p": 1.0, "k2m": 1.0,
        "du": 1.0, "dv": 1.0, "dp": 1.0, "dq": 1.0, "z0": 1.0,
    },
    "grid": {"dim": 2, "n": 64, "length": 1.0},
    "model": {"variant": "ReGS", "epsilon": None, "feed": None, "lambda": None},
    "time": {
        "dt": 1e-3, "t_end": 1.0, "scheme": "strang", "diffusion_solver": "spectral",
        "sample_every": 10, "positivity_floor": 1e-12,
    },
    "initial": {
        "kind": "equilibrium-perturbation",
        "seed": 0,
        "amplitude": 1e-2,
        "mode": "random",
        "modes": 3,
        "base": "detailed-balance",
        "background": [1.0, 0.0, 0.0, 0.0],
        "inside": [0.5, 0.25, 0.0, 0.0],
        "size": 0.2,
        "noise": 0.01,
        "path": None,
    },
    "output": {
        "dir": "out", "diagnostics": "diagnostics.csv", "monitor": True,
        "snapshot_every": 0, "checkpoint_every": 0, "final_snapshot": "final.bin",
    },
    "sweep": {"eps": [1e-1, 1e-2, 1e-3, 1e-4], "workers": 1},
    "slow_fast": {"feed": 0.04, "u0": 1.0, "v0": 0.25, "perturbation": 0.01},
}

INITIAL_KINDS = ("equilibrium-perturbation", "seeded-square", "from-snapshot")


@dataclass
class OutputSpec:
    dir: Path
    diagnostics: str
    monitor: bool
    snapshot_every: int
    checkpoint_every: int
    final_snapshot: str

    def path(self, name: str) -> Path:
        return self.dir / name


@dataclass
class RunConfig:
    params: Parameters
    grid: GridSpec
    variant: ModelVariant
    step: StepConfig
    initial: dict
    output: OutputSpec
    sweep: dict
    slow_fast: dict
    lam: float | None = None
    raw: dict = field(default_factory=dict)

    @property
    def effective_params(self) -> Parameters:
        """Parameters after the ``lambda`` override (``k0m = lambda``, static ``p, q``)."""
        if self.lam is None:
            return self.params
        return self.params.with_(k0m=self.lam, dp_=0.0, dq=0.0)


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(where, "unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(where, "expected a section")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def _number(raw: dict, section: str, key: str, kind=float):
    value = raw[section][key]
    name = f"{section}.{key}"
    if isinstance(value, bool) or value is None:
        raise ConfigError(name, f"expected a number, got {value!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {value!r}") from None
    if kind is int and out != value:
        raise ConfigError(name, f"expected an integer, got {value!r}")
    return out


def _per_axis(value, dim: int, name: str, kind):
    if isinstance(value, (list, tuple)):
        if len(value) != dim:
            raise ConfigError(name, f"needs {dim} entries, got {len(value)}")
        return tuple(kind(v) for v in value)
    return (kind(value),) * dim


def build_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    """Validate a nested mapping (already merged with overrides)."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a mapping")
    if "grid" not in raw:
        raise ConfigError("grid", "missing required section")
    merged = _merge(DEFAULTS, raw)

    p = {k: _number(merged, "parameters", k) for k in DEFAULTS["parameters"]}
    p["dp_"] = p.pop("dp")
    for k, v in p.items():
        name = "dp" if k == "dp_" else k
        if k == "z0" and not v > 0:
            raise ConfigError(f"parameters.{name}", f"must be > 0, got {v}")
        if not v >= 0:
            raise ConfigError(f"parameters.{name}", f"must be >= 0, got {v}")
    params = Parameters(**p)

    g = merged["grid"]
    dim = _number(merged, "grid", "dim", int)
    if dim not in (1, 2, 3):
        raise ConfigError("grid.dim", f"must be 1, 2 or 3, got {dim}")
    try:
        grid = GridSpec(dim, _per_axis(g["n"], dim, "grid.n", int), _per_axis(g["length"], dim, "grid.length", float))
    except (TypeError, ValueError) as exc:
        raise ConfigError("grid", str(exc)) from None

    m = merged["model"]
    tag = m["variant"]
    if tag not in ModelVariant.TAGS:
        raise ConfigError("model.variant", f"must be one of {ModelVariant.TAGS}, got {tag!r}")
    if m["epsilon"] is not None and tag != "ReGSEps":
        raise ConfigError("model.epsilon", "epsilon requires variant ReGSEps")
    if m["feed"] is not None and tag != "ReducedGS":
        raise ConfigError("model.feed", "feed requires variant ReducedGS")
    if m["lambda"] is not None and tag != "IrGS":
        raise ConfigError("model.lambda", "lambda requires variant IrGS")
    lam = None
    if m["lambda"] is not None:
        lam = _number(merged, "model", "lambda")
        if not lam > 0:
            raise ConfigError("model.lambda", f"must be > 0, got {lam}")
    try:
        if tag == "ReGSEps":
            if m["epsilon"] is None:
                raise ConfigError("model.epsilon", "variant ReGSEps requires epsilon")
            variant = ModelVariant.regs_eps(_number(merged, "model", "epsilon"))
        elif tag == "ReducedGS":
            if m["feed"] is None:
                raise ConfigError("model.feed", "variant ReducedGS requires feed")
            variant = ModelVariant.reduced(_number(merged, "model", "feed"))
        else:
            variant = ModelVariant(tag)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from None

    t = merged["time"]
    try:
        step = StepConfig(
            dt=_number(merged, "time", "dt"),
            t_end=_number(merged, "time", "t_end"),
            scheme=t["scheme"],
            diffusion_solver=t["diffusion_solver"],
            sample_every=_number(merged, "time", "sample_every", int),
            positivity_floor=_number(merged, "time", "positivity_floor"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        key = str(exc).split(" ", 1)[0]
        raise ConfigError(f"time.{key}", str(exc)) from None

    init = dict(merged["initial"])
    if init["kind"] not in INITIAL_KINDS:
        raise ConfigError("initial.kind", f"must be one of {INITIAL_KINDS}, got {init['kind']!r}")
    init["seed"] = _number(merged, "initial", "seed", int)
    if init["kind"] == "equilibrium-perturbation":
        amp = _number(merged, "initial", "amplitude")
        if not 0 <= amp <= 1:
            raise ConfigError("initial.amplitude", f"must be in [0, 1], got {amp}")
        if init["mode"] not in PERTURBATION_MODES:
            raise ConfigError("initial.mode", f"must be one of {PERTURBATION_MODES}, got {init['mode']!r}")
        if init["base"] not in ("detailed-balance", "trivial"):
            raise ConfigError("initial.base", f"must be detailed-balance or trivial, got {init['base']!r}")
    elif init["kind"] == "seeded-square":
        for key in ("background", "inside"):
            vals = init[key]
            if not isinstance(vals, (list, tuple)) or len(vals) != 4:
                raise ConfigError(f"initial.{key}", "needs four values (u, v, p, q)")
            if any(not float(x) >= 0 for x in vals):
                raise ConfigError(f"initial.{key}", "values must be >= 0")
    else:
        if not init["path"]:
            raise ConfigError("initial.path", "from-snapshot requires a path")
        path = Path(init["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        init["path"] = path

    o = merged["output"]
    out_dir = Path(o["dir"])
    if base_dir is not None and not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    output = OutputSpec(
        dir=out_dir,
        diagnostics=str(o["diagnostics"]),
        monitor=bool(o["monitor"]),
        snapshot_every=_number(merged, "output", "snapshot_every", int),
        checkpoint_every=_number(merged, "output", "checkpoint_every", int),
        final_snapshot=str(o["final_snapshot"]),
    )
    for key in ("snapshot_every", "checkpoint_every"):
        if getattr(output, key) < 0:
            raise ConfigError(f"output.{key}", "must be >= 0")

    sweep = dict(merged["sweep"])
    try:
        sweep["eps"] = [float(e) for e in sweep["eps"]]
    except (TypeError, ValueError):
        raise ConfigError("sweep.eps", "expected a list of numbers") from None
    if any(e < 0 for e in sweep["eps"]):
        raise ConfigError("sweep.eps", "values must be >= 0")
    sweep["workers"] = _number(merged, "sweep", "workers", int)

    sf = {k: _number(merged, "slow_fast", k) for k in DEFAULTS["slow_fast"]}
    for k, v in sf.items():
        if not v >= 0:
            raise ConfigError(f"slow_fast.{k}", f"must be >= 0, got {v}")

    return RunConfig(params, grid, variant, step, init, output, sweep, sf, lam, merged)


def parse_override(text: str) -> tuple[list[str], Any]:
    """``"time.dt=5e-4"`` -> ``(["time", "dt"], 5e-4)``; the value is parsed as YAML."""
    if "=" not in text:
        raise ConfigError(text, "override must look like section.key=value")
    key, value = text.split("=", 1)
    parts = key.strip().split(".")
    if len(parts) != 2 or not all(parts):
        raise ConfigError(key, "override key must be section.key")
    return parts, yaml.safe_load(value)


def apply_overrides(raw: dict, overrides) -> dict:
    out = copy.deepcopy(raw)
    for text in overrides or ():
        (section, key), value = parse_override(text)
        out.setdefault(section, {})
        if not isinstance(out[section], dict):
            raise ConfigError(section, "expected a section")
        out[section][key] = value
    return out


def load_config(path, overrides=None) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"parse error: {exc}") from None
    return build_config(apply_overrides(raw, overrides), base_dir=path.parent)


def base_equilibrium(cfg: RunConfig) -> Equilibrium:
    """Equilibrium the perturbation initializer starts from."""
    params = cfg.effective_params
    if cfg.initial.get("base") == "trivial" or not params.reversible:
        return trivial_equilibrium(params)
    return detailed_balance_equilibrium(params)


def initial_state(cfg: RunConfig) -> tuple[State, int]:
    """Build the configured initial state; returns ``(state, clamp_events)``."""
    init = cfg.initial
    if init["kind"] == "equilibrium-perturbation":
        eq = base_equilibrium(cfg)
        state = perturbed_equilibrium(cfg.grid, eq, init["amplitude"], init["seed"], init["mode"], int(init["modes"]))
        return state, 0
    if init["kind"] == "seeded-square":
        state = seeded_square(
            cfg.grid, tuple(map(float, init["background"])), tuple(map(float, init["inside"])),
            float(init["size"]), float(init["noise"]), init["seed"],
        )
        return state, 0
    from .io import load_snapshot

    header, state = load_snapshot(init["path"])
    if header.grid.shape != cfg.grid.shape or header.grid.length != cfg.grid.length:
        raise ConfigError("initial.path", f"snapshot grid {header.grid.n} does not match configured grid {cfg.grid.n}")
    return state, header.clamp_events


def ensure_output_dir(cfg: RunConfig) -> Path:
    os.makedirs(cfg.output.dir, exist_ok=True)
    if not os.access(cfg.output.dir, os.W_OK):
        raise PermissionError(f"output directory {cfg.output.dir} is not writable")
    return cfg.output.dir
