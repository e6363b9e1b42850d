"""TOML configuration: parsing, validation and defaults.

Layout (every key except ``model.family`` and ``run.t`` is optional)::

    [model]
    family = "exp"            # exp | pareto | correlated
    rate = 1.0                # exp, correlated
    shape = 2.0               # pareto
    gamma = 2.0               # correlated
    label = "my model"

    [model.offspring]         # exp, pareto
    law = "constant"          # constant | two_point | geometric
    k = 2                     # constant, two_point
    p0 = 0.4                  # two_point
    mean = 1.3                # geometric

    [run]
    t = 10.0
    window = 3.0
    cap = 10000000
    seed = 0
    replicates = 1000
    order = "event"           # event | depth
    record_atoms = true

    [analysis]
    grid = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
    horizons = [6.0, 10.0, 14.0]
    max_law_min_runs = 500
    census = { minage = [[0.0, 0.0], [1.0, 1.0]] }
    laplace = [{ name = "ramp", phi = [[0.0, 0.0], [1.0, 1.0]], psi = [[0.0, 0.0], [1.0, 1.0]] }]

    [output]
    dir = "."
    json = "report.json"
    atoms_csv = "atoms.csv"
    maxima_csv = "maxima.csv"
"""

from __future__ import annotations

import math
import os
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from . import model as M
from .engine import SimulationConfig
from .errors import ModelRejected, ParseError, ValidationError
from .functions import PiecewiseLinear
from .stats import DEFAULT_GRID, Analysis

SEED_ENV = "BRANCHSCOPE_SEED"

_SECTIONS = {"model", "run", "analysis", "output"}
_MODEL_KEYS = {
    "exp": {"family", "label", "rate", "offspring"},
    "pareto": {"family", "label", "shape", "offspring"},
    "correlated": {"family", "label", "rate", "gamma"},
}
_OFFSPRING_KEYS = {
    "constant": {"law", "k"},
    "two_point": {"law", "p0", "k"},
    "geometric": {"law", "mean"},
}
_RUN_KEYS = {"t", "window", "cap", "seed", "replicates", "order", "record_atoms"}
_ANALYSIS_KEYS = {"grid", "horizons", "max_law_min_runs", "census", "laplace"}
_OUTPUT_KEYS = {"dir", "json", "atoms_csv", "maxima_csv"}


@dataclass
class OutputPaths:
    dir: str = "."
    json: str = "report.json"
    atoms_csv: str = "atoms.csv"
    maxima_csv: str = "maxima.csv"

    def path(self, name):
        return Path(self.dir) / getattr(self, name)


@dataclass
class Config:
    model: M.LifetimeOffspringModel
    run: SimulationConfig
    replicates: int = 1000
    analysis: Analysis = field(default_factory=Analysis)
    output: OutputPaths = field(default_factory=OutputPaths)
    source: str | None = None

    def with_overrides(self, **kw):
        """Copy with run-section overrides (``t``, ``seed``, ``window``, ``cap``...)."""
        run_kw = {}
        mapping = {"t": "horizon", "cap": "edge_cap"}
        replicates = kw.pop("replicates", None)
        for key, value in kw.items():
            if value is not None:
                run_kw[mapping.get(key, key)] = value
        try:
            run = replace(self.run, **run_kw)
        except (ValueError, TypeError) as exc:
            raise ValidationError("run", str(exc)) from exc
        out = replace(self, run=run)
        if replicates is not None:
            out.replicates = _count(replicates, "run.replicates", minimum=1)
        return out


# --------------------------------------------------------------------------
# helpers


def _check_keys(table, allowed, prefix):
    if not isinstance(table, dict):
        raise ValidationError(prefix, "expected a table")
    for key in table:
        if key not in allowed:
            name = f"{prefix}.{key}" if prefix else key
            raise ValidationError(name, f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _number(value, key, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(key, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(key, "must be finite")
    if positive and not value > 0:
        raise ValidationError(key, f"must be positive, got {value}")
    if nonneg and value < 0:
        raise ValidationError(key, f"must be nonnegative, got {value}")
    return value


def _count(value, key, minimum=0):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ValidationError(key, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ValidationError(key, f"must be at least {minimum}")
    return value


def _knots(value, key):
    if not isinstance(value, list) or not value:
        raise ValidationError(key, "expected a non-empty list of [x, y] pairs")
    pairs = []
    for i, pair in enumerate(value):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ValidationError(f"{key}[{i}]", "expected an [x, y] pair")
        pairs.append((_number(pair[0], f"{key}[{i}]"), _number(pair[1], f"{key}[{i}]")))
    try:
        return PiecewiseLinear.from_knots(pairs)
    except ValueError as exc:
        raise ValidationError(key, str(exc)) from exc


def _string(value, key, choices=None):
    if not isinstance(value, str):
        raise ValidationError(key, f"expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ValidationError(key, f"must be one of {', '.join(sorted(choices))}")
    return value


# --------------------------------------------------------------------------
# sections


def build_offspring(table, prefix="model.offspring"):
    if not isinstance(table, dict):
        raise ValidationError(prefix, "expected a table")
    law = _string(table.get("law", "constant"), f"{prefix}.law", _OFFSPRING_KEYS)
    _check_keys(table, _OFFSPRING_KEYS[law], prefix)
    try:
        if law == "constant":
            return M.Constant(_count(table.get("k", 2), f"{prefix}.k"))
        if law == "two_point":
            if "p0" not in table or "k" not in table:
                raise ValidationError(prefix, "two_point needs p0 and k")
            return M.TwoPoint(_number(table["p0"], f"{prefix}.p0"), _count(table["k"], f"{prefix}.k"))
        if "mean" not in table:
            raise ValidationError(f"{prefix}.mean", "required for geometric")
        return M.Geometric(_number(table["mean"], f"{prefix}.mean", positive=True))
    except ModelRejected as exc:
        raise ValidationError(prefix, str(exc)) from exc


def build_model(table) -> M.LifetimeOffspringModel:
    """Turn a ``[model]`` table into a validated model."""
    if not isinstance(table, dict):
        raise ValidationError("model", "expected a table")
    if "family" not in table:
        raise ValidationError("model.family", "required")
    family = _string(table["family"], "model.family", _MODEL_KEYS)
    _check_keys(table, _MODEL_KEYS[family], "model")
    label = _string(table.get("label", ""), "model.label")
    try:
        if family == "correlated":
            mdl = M.CorrelatedPoissonOffspring(
                rate=_number(table.get("rate", 1.0), "model.rate", positive=True),
                gamma=_number(table.get("gamma", 2.0), "model.gamma", nonneg=True),
                label=label,
            )
        else:
            offspring = build_offspring(table.get("offspring", {}))
            if family == "exp":
                mdl = M.IndependentExpLifetime(
                    rate=_number(table.get("rate", 1.0), "model.rate", positive=True),
                    offspring=offspring, label=label,
                )
            else:
                if "shape" not in table:
                    raise ValidationError("model.shape", "required for the pareto family")
                mdl = M.IndependentParetoLifetime(
                    shape=_number(table["shape"], "model.shape", positive=True),
                    offspring=offspring, label=label,
                )
        M.validate(mdl)
    except ModelRejected as exc:
        raise ValidationError("model", str(exc)) from exc
    return mdl


def build_run(table, characteristics):
    _check_keys(table, _RUN_KEYS, "run")
    if "t" not in table:
        raise ValidationError("run.t", "required")
    seed = _count(table.get("seed", 0), "run.seed")
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            seed = int(env, 0)
        except ValueError as exc:
            raise ValidationError(SEED_ENV, f"not an integer: {env!r}") from exc
    if not 0 <= seed < 2**64:
        raise ValidationError("run.seed", "must fit in 64 unsigned bits")
    record = table.get("record_atoms", True)
    if not isinstance(record, bool):
        raise ValidationError("run.record_atoms", "expected true or false")
    kwargs = dict(
        horizon=_number(table["t"], "run.t", positive=True),
        window=_number(table.get("window", 3.0), "run.window", positive=True),
        edge_cap=_count(table.get("cap", 10_000_000), "run.cap", minimum=1),
        seed=seed,
        record_atoms=record,
        characteristics=characteristics,
        order=_string(table.get("order", "event"), "run.order", {"event", "depth"}),
    )
    try:
        run = SimulationConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ValidationError("run", str(exc)) from exc
    replicates = _count(table.get("replicates", 1000), "run.replicates", minimum=1)
    return run, replicates


def build_analysis(table, window):
    _check_keys(table, _ANALYSIS_KEYS, "analysis")
    grid = table.get("grid", list(DEFAULT_GRID))
    if not isinstance(grid, list) or not grid:
        raise ValidationError("analysis.grid", "expected a non-empty list")
    grid = tuple(sorted(_number(x, "analysis.grid") for x in grid))
    if grid[0] < -window:
        raise ValidationError("analysis.grid", f"points must be >= -window = {-window}")
    horizons = table.get("horizons", [])
    if not isinstance(horizons, list):
        raise ValidationError("analysis.horizons", "expected a list")
    horizons = tuple(_number(t, "analysis.horizons", positive=True) for t in horizons)
    if horizons and len(horizons) < 3:
        raise ValidationError("analysis.horizons", "need at least three horizons")

    census = table.get("census", {})
    if not isinstance(census, dict):
        raise ValidationError("analysis.census", "expected a table of knot lists")
    characteristics = {}
    for label, knots in census.items():
        phi = _knots(knots, f"analysis.census.{label}")
        if not phi.is_nonnegative():
            raise ValidationError(f"analysis.census.{label}", "must be nonnegative")
        characteristics[label] = phi

    pairs = []
    laplace = table.get("laplace", [])
    if not isinstance(laplace, list):
        raise ValidationError("analysis.laplace", "expected an array of tables")
    for i, item in enumerate(laplace):
        key = f"analysis.laplace[{i}]"
        _check_keys(item, {"name", "phi", "psi"}, key)
        name = _string(item.get("name", f"pair{i}"), f"{key}.name")
        phi = _knots(item.get("phi", [[0.0, 0.0]]), f"{key}.phi")
        psi = _knots(item.get("psi", [[0.0, 0.0]]), f"{key}.psi")
        for fn, sub in ((phi, "phi"), (psi, "psi")):
            try:
                fn.check_support(window)
            except ValueError as exc:
                raise ValidationError(f"{key}.{sub}", str(exc)) from exc
        pairs.append((name, phi, psi))

    analysis = Analysis(
        grid=grid,
        laplace_pairs=pairs,
        horizons=horizons,
        max_law_min_runs=_count(table.get("max_law_min_runs", 500), "analysis.max_law_min_runs", 1),
    )
    return analysis, characteristics


def build_output(table):
    _check_keys(table, _OUTPUT_KEYS, "output")
    return OutputPaths(**{k: _string(v, f"output.{k}") for k, v in table.items()})


# --------------------------------------------------------------------------
# entry points

_LOCATION = re.compile(r"\(at line (\d+), column (\d+)\)")


def loads(text: str, source: str | None = None) -> Config:
    """Parse and validate TOML text."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        m = _LOCATION.search(str(exc))
        if m and line is None:
            line, col = int(m.group(1)), int(m.group(2))
        raise ParseError(str(exc), line, col) from exc
    return from_dict(data, source)


def from_dict(data: dict, source: str | None = None) -> Config:
    _check_keys(data, _SECTIONS, "")
    if "model" not in data:
        raise ValidationError("model", "section required")
    mdl = build_model(data["model"])
    run_table = data.get("run", {})
    if not isinstance(run_table, dict):
        raise ValidationError("run", "expected a table")
    window = _number(run_table.get("window", 3.0), "run.window", positive=True)
    analysis, characteristics = build_analysis(data.get("analysis", {}), window)
    run, replicates = build_run(run_table, characteristics)
    output = build_output(data.get("output", {}))
    return Config(mdl, run, replicates, analysis, output, source)


def parse_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(str(path), f"cannot read config: {exc.strerror}") from exc
    return loads(text, str(path))
