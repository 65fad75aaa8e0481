"""Config-driven runs: parse, execute, write CSV/JSON/manifest artifacts."""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from ..errors import DomainError, HypothesisViolation, NumericalError, OpenLatticeError, ResourceError
from ..models import MODELS, build_model
from .correlations import area_law_scan, correlation_decay_scan, telescoping_decomposition
from .localization import boundary_evolution_experiment, localization_experiment
from .mixing import DEFAULT_T_GRID, fit_rapid_mixing
from .table import ExperimentTable, canonical_json, config_hash

log = logging.getLogger(__name__)

EXIT_OK, EXIT_VERDICT, EXIT_PARSE, EXIT_RESOURCE, EXIT_HYPOTHESIS, EXIT_NUMERICAL = range(6)


class ConfigError(OpenLatticeError, ValueError):
    """The config file is malformed or names something unknown."""


@dataclass
class ExperimentSpec:
    type: str
    model: str
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    root_seed: int = 0
    output_dir: str = "output"
    experiments: list[ExperimentSpec] = field(default_factory=list)
    svg: bool = False


def _family(spec: ExperimentSpec, dim_cap: int | None):
    fam = build_model(spec.model, **spec.params)
    if dim_cap is not None:
        fam.dim_cap = dim_cap
    return fam


def _factory(spec: ExperimentSpec, dim_cap: int | None):
    params = {k: v for k, v in spec.params.items() if k != "size"}

    def build(size):
        fam = build_model(spec.model, size=size, **params)
        if dim_cap is not None:
            fam.dim_cap = dim_cap
        return fam

    return build


def _rapid_mixing(spec, seed, dim_cap):
    g, tol = spec.grid, spec.tolerances
    fit = fit_rapid_mixing(_factory(spec, dim_cap), g.get("sizes", [1, 2, 3, 4]),
                           g.get("t_grid", list(DEFAULT_T_GRID)), int(g.get("samples", 16)), seed,
                           float(g.get("epsilon", 1e-3)))
    table = fit.table
    table.model = spec.model
    if "gamma_range" in tol:
        lo, hi = tol["gamma_range"]
        table.verdict("gamma_in_range", lo <= fit.gamma <= hi, fit.gamma, [lo, hi])
    return table


def _localization(spec, seed, dim_cap):
    g = spec.grid
    return localization_experiment(_family(spec, dim_cap), g["A"], g.get("s_range", [1, 2, 3]), seed,
                                   float(spec.tolerances.get("min_drop", 1.0)))


def _boundary_evolution(spec, seed, dim_cap):
    g = spec.grid
    return boundary_evolution_experiment(_family(spec, dim_cap), g["A"], int(g.get("m", 1)),
                                         g.get("t_grid", [0.0, 0.5, 1.0]), g.get("tau", "mixed"), seed,
                                         float(spec.tolerances.get("zero_tol", 1e-10)))


def _correlation_decay(spec, seed, dim_cap):
    g = spec.grid
    return correlation_decay_scan(_family(spec, dim_cap), g["A"], g["B_list"], seed)


def _area_law(spec, seed, dim_cap):
    g = spec.grid
    cuts = g.get("cuts")
    return area_law_scan(_factory(spec, dim_cap), g.get("sizes", [2, 3, 4]),
                         None if cuts is None else (lambda size: cuts[str(size)]), seed,
                         spec.tolerances.get("i_bound"))


def _telescoping(spec, seed, dim_cap):
    g = spec.grid
    _, table = telescoping_decomposition(_family(spec, dim_cap), g["A"], int(g.get("n0", 1)), g.get("L"),
                                         float(g.get("t_min", 1.0)), float(g.get("kappa", 1.0)),
                                         g.get("tau", "mixed"), seed,
                                         float(spec.tolerances.get("identity_tol", 1e-9)))
    return table


RUNNERS: dict[str, Callable[[ExperimentSpec, int, int | None], ExperimentTable]] = {
    "rapid_mixing": _rapid_mixing,
    "localization": _localization,
    "boundary_evolution": _boundary_evolution,
    "correlation_decay": _correlation_decay,
    "area_law": _area_law,
    "telescoping": _telescoping,
}


def parse_config(data: Any) -> RunConfig:
    """Validate a config mapping (already loaded from JSON)."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - {"root_seed", "output_dir", "experiments", "svg"}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    seed = data.get("root_seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("root_seed must be a nonnegative integer")
    exps = []
    for k, e in enumerate(data.get("experiments", [])):
        if not isinstance(e, dict):
            raise ConfigError(f"experiment {k} must be an object")
        extra = set(e) - {"type", "model", "params", "grid", "tolerances"}
        if extra:
            raise ConfigError(f"experiment {k}: unknown keys {sorted(extra)}")
        if e.get("type") not in RUNNERS:
            raise ConfigError(f"experiment {k}: unknown type {e.get('type')!r}; known: {sorted(RUNNERS)}")
        if e.get("model") not in MODELS:
            raise ConfigError(f"experiment {k}: unknown model {e.get('model')!r}; known: {sorted(MODELS)}")
        for key in ("params", "grid", "tolerances"):
            if not isinstance(e.get(key, {}), dict):
                raise ConfigError(f"experiment {k}: {key} must be an object")
        exps.append(ExperimentSpec(e["type"], e["model"], dict(e.get("params", {})),
                                   dict(e.get("grid", {})), dict(e.get("tolerances", {}))))
    return RunConfig(seed, str(data.get("output_dir", "output")), exps, bool(data.get("svg", False)))


def load_config(path) -> tuple[RunConfig, dict]:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw), raw


def experiment_seed(root_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([root_seed, index]).generate_state(1)[0])


def _write_svg(table: ExperimentTable, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    numeric = [c for c in table.columns
               if table.rows and all(isinstance(r[c], (int, float)) and not isinstance(r[c], bool)
                                     for r in table.rows)]
    if len(numeric) < 2:
        return
    x = table.column(numeric[0])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for c in numeric[1:]:
        y = table.column(c)
        if np.all(y > 0):
            ax.semilogy(x, y, "o-", label=c)
    ax.set_xlabel(numeric[0])
    ax.legend(fontsize=7)
    ax.set_title(f"{table.statement} ({table.model})", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


@dataclass
class RunResult:
    exit_code: int
    manifest: dict
    tables: list[ExperimentTable]


def run_config(path=None, *, config: RunConfig | None = None, raw: dict | None = None,
               seed: int | None = None, out: str | None = None, dim_cap: int | None = None) -> RunResult:
    """Run every experiment of a config; the exit code is 0 iff all verdicts pass.

    Errors map to distinct exit codes: parse 2, resource cap 3, hypothesis
    violation 4, numerical failure 5 (verdict failures give 1). The run stops
    at the first error and still writes the manifest.
    """
    try:
        if config is None:
            config, raw = load_config(path)
    except ConfigError as exc:
        log.error("%s", exc)
        return RunResult(EXIT_PARSE, {"error": str(exc)}, [])
    root = config.root_seed if seed is None else seed
    outdir = Path(out or config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    chash = config_hash(raw if raw is not None else config.__dict__)
    manifest = {"config_hash": chash, "root_seed": root, "experiments": [], "passed": True}
    tables, code = [], EXIT_OK
    for k, spec in enumerate(config.experiments):
        s = experiment_seed(root, k)
        entry = {"index": k, "type": spec.type, "model": spec.model, "seed": s}
        try:
            table = RUNNERS[spec.type](spec, s, dim_cap)
        except (DomainError, KeyError, TypeError) as exc:
            entry["error"], code = f"parse: {exc}", EXIT_PARSE
        except ResourceError as exc:
            entry["error"], code = f"resource: {exc}", EXIT_RESOURCE
        except HypothesisViolation as exc:
            entry["error"], code = f"hypothesis: {exc}", EXIT_HYPOTHESIS
        except NumericalError as exc:
            entry["error"], code = f"numerical: {exc}", EXIT_NUMERICAL
        if "error" in entry:
            log.error("experiment %d (%s): %s", k, spec.type, entry["error"])
            manifest["experiments"].append(entry)
            manifest["passed"] = False
            break
        table.seed = s
        table.config_hash = chash
        stem = f"{k:02d}_{spec.type}_{spec.model}"
        (outdir / f"{stem}.csv").write_text(table.to_csv())
        (outdir / f"{stem}.json").write_text(table.to_json() + "\n")
        if config.svg:
            _write_svg(table, outdir / f"{stem}.svg")
        entry.update(csv=f"{stem}.csv", json=f"{stem}.json", passed=table.passed,
                     verdicts={n: v.to_dict() for n, v in table.verdicts.items()})
        manifest["experiments"].append(entry)
        tables.append(table)
        log.info("%s", table.summary())
        if not table.passed:
            manifest["passed"] = False
            code = EXIT_VERDICT
    (outdir / "manifest.json").write_text(json.dumps(json.loads(canonical_json(manifest)), indent=2,
                                                     sort_keys=True) + "\n")
    return RunResult(code, manifest, tables)


def smoke_config_path() -> str:
    return os.path.join(os.path.dirname(__file__), "smoke.json")
