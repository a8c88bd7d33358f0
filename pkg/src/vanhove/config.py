"""Run configuration files (YAML).

Matrices are nested lists of ``[re, im]`` pairs (plain numbers are read as
real).  Parse problems raise :class:`ConfigError` with the line of the
offending node.

    model:
      preset: star-bath            # or explicit h_s, h_r, w, v, omega_r
      params: {n_levels: 400, band: 1.5}
      lam: 0.1
    quadrature: {order: 12, quad_order: 16, seed: 0}
    sweep: {lambda_grid: [0.4, 0.2, 0.1], tau_grid: [1.0], epsilon: 0.5}
    output: {directory: out}
    clustering: {C: 0.5, f: {amplitude: 1.0, tau: 1.0}, epsilon: 0.5}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .bounds import PRESET_CERTIFICATES, ClusteringData, Kernel
from .model import ConfigError, CorrelationFunction, SystemBathModel, make_preset

__all__ = ["RunConfig", "load_config", "parse_config"]

MATRIX_KEYS = ("h_s", "h_r", "w", "v")
SECTIONS = ("model", "quadrature", "sweep", "output", "clustering")

QUAD_DEFAULTS = {"order": 12, "quad_order": 16, "seed": 0, "n_probe": 64}
SWEEP_DEFAULTS = {"lambda_grid": [0.4, 0.2, 0.1], "tau_grid": [1.0], "epsilon": 0.5, "cutoff": None, "use_finite": None, "window": None}


@dataclass
class RunConfig:
    model: SystemBathModel
    quadrature: dict = field(default_factory=lambda: dict(QUAD_DEFAULTS))
    sweep: dict = field(default_factory=lambda: dict(SWEEP_DEFAULTS))
    output: dict = field(default_factory=dict)
    clustering: ClusteringData | None = None
    source: str = "<string>"

    @property
    def seed(self) -> int:
        return int(self.quadrature["seed"])


# -- located YAML -----------------------------------------------------------------


class _Loc:
    """Plain value plus the YAML node it came from."""

    def __init__(self, node, value):
        self.node = node
        self.value = value

    @property
    def line(self):
        return self.node.start_mark.line + 1


def _located(node):
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            out[k.value] = _located(v)
        return _Loc(node, out)
    if isinstance(node, yaml.SequenceNode):
        return _Loc(node, [_located(v) for v in node.value])
    # resolve scalars through the safe loader's constructors (ints, floats, null, bools)
    return _Loc(node, yaml.SafeLoader(yaml.dump(None)).construct_object(node, deep=True))


def _plain(loc):
    if isinstance(loc.value, dict):
        return {k: _plain(v) for k, v in loc.value.items()}
    if isinstance(loc.value, list):
        return [_plain(v) for v in loc.value]
    return loc.value


def _err(loc, msg, source):
    return ConfigError(f"{source}:{loc.line}: {msg}")


def _number(loc, source, what):
    v = loc.value
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        if isinstance(v, list) and len(v) == 2 and all(isinstance(x.value, (int, float)) and not isinstance(x.value, bool) for x in v):
            return complex(v[0].value, v[1].value)
        raise _err(loc, f"{what}: expected a number or an [re, im] pair", source)
    return complex(v)


def _vector(loc, source, what):
    if not isinstance(loc.value, list) or not loc.value:
        raise _err(loc, f"{what}: expected a nonempty list", source)
    return np.array([_number(x, source, f"{what}[{j}]") for j, x in enumerate(loc.value)])


def _matrix(loc, source, what):
    if not isinstance(loc.value, list) or not loc.value:
        raise _err(loc, f"{what}: expected a nonempty list of rows", source)
    rows = [_vector(r, source, f"{what} row {j}") for j, r in enumerate(loc.value)]
    n = len(rows)
    for j, (r, node) in enumerate(zip(rows, loc.value)):
        if r.size != n:
            raise _err(node, f"{what} row {j} has {r.size} entries, expected {n}", source)
    return np.array(rows)


def _model(loc, source):
    sec = loc.value
    if not isinstance(sec, dict):
        raise _err(loc, "model section must be a mapping", source)
    lam = sec.get("lam")
    if "preset" in sec:
        params = _plain(sec["params"]) if "params" in sec else {}
        if not isinstance(params, dict):
            raise _err(sec["params"], "params must be a mapping", source)
        if lam is not None:
            params["lam"] = lam.value
        try:
            return make_preset(str(sec["preset"].value), **params)
        except TypeError as exc:
            raise _err(sec["preset"], f"bad preset parameters: {exc}", source) from None
        except ConfigError as exc:
            raise _err(sec["preset"], str(exc), source) from None
    missing = [k for k in (*MATRIX_KEYS, "omega_r") if k not in sec]
    if missing:
        raise _err(loc, f"model needs a preset or all of h_s, h_r, w, v, omega_r (missing {', '.join(missing)})", source)
    mats = {k: _matrix(sec[k], source, k) for k in MATRIX_KEYS}
    phi = None
    if "phi" in sec:
        spec = _plain(sec["phi"])
        if not isinstance(spec, dict):
            raise _err(sec["phi"], "phi must be a mapping", source)
        family = spec.pop("family", "exponential")
        try:
            phi = CorrelationFunction.analytic(family, **spec)
        except ConfigError as exc:
            raise _err(sec["phi"], str(exc), source) from None
    try:
        return SystemBathModel(
            omega_r=_vector(sec["omega_r"], source, "omega_r"),
            lam=0.1 if lam is None else float(lam.value),
            name=str(_plain(sec["name"])) if "name" in sec else "custom",
            phi_analytic=phi,
            **mats,
        )
    except ValueError as exc:
        raise _err(loc, str(exc), source) from None


def _clustering(loc, model, source):
    spec = _plain(loc)
    if spec == "preset":
        cert = PRESET_CERTIFICATES.get(model.name)
        if cert is None:
            raise _err(loc, f"no shipped certificate for model {model.name!r}", source)
        return cert
    if not isinstance(spec, dict) or "C" not in spec:
        raise _err(loc, "clustering needs C (and optionally f, epsilon) or the word 'preset'", source)
    f = spec.get("f") or {}
    try:
        return ClusteringData(
            C=float(spec["C"]),
            f=Kernel.exponential(float(f.get("amplitude", 1.0)), float(f.get("tau", 1.0))),
            epsilon=float(spec.get("epsilon", 0.5)),
        )
    except (TypeError, ValueError) as exc:
        raise _err(loc, str(exc), source) from None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{source}{line}: malformed YAML ({getattr(exc, 'problem', exc)})") from None
    if root is None:
        raise ConfigError(f"{source}: empty configuration")
    top = _located(root)
    if not isinstance(top.value, dict):
        raise _err(top, "top level must be a mapping", source)
    unknown = [k for k in top.value if k not in SECTIONS]
    if unknown:
        raise _err(top.value[unknown[0]], f"unknown section {unknown[0]!r}", source)
    if "model" not in top.value:
        raise _err(top, "missing model section", source)
    model = _model(top.value["model"], source)

    quad = dict(QUAD_DEFAULTS)
    sweep = dict(SWEEP_DEFAULTS)
    for name, target in (("quadrature", quad), ("sweep", sweep)):
        if name in top.value:
            sec = top.value[name]
            if not isinstance(sec.value, dict):
                raise _err(sec, f"{name} section must be a mapping", source)
            for k, v in sec.value.items():
                if k not in target:
                    raise _err(v, f"unknown {name} key {k!r}", source)
                target[k] = _plain(v)
    for key in ("lambda_grid", "tau_grid"):
        grid = sweep[key]
        if not isinstance(grid, list) or not grid or not all(isinstance(x, (int, float)) for x in grid):
            node = top.value["sweep"].value.get(key, top.value["sweep"]) if "sweep" in top.value else top
            raise _err(node, f"{key} must be a nonempty list of numbers", source)
    if any(x <= 0 for x in sweep["lambda_grid"]):
        raise _err(top.value["sweep"], "lambda_grid entries must be positive", source)
    output = _plain(top.value["output"]) if "output" in top.value else {}
    clustering = _clustering(top.value["clustering"], model, source) if "clustering" in top.value else None
    return RunConfig(model, quad, sweep, output or {}, clustering, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    return parse_config(text, str(path))
