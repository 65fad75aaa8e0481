"""Experiment tables: measured columns, fits and verdicts with provenance."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def canonical_json(obj: Any) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj: Any) -> str:
    """Short sha256 of the canonical JSON form of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def _plain(x: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into JSON-ready values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    return x


def format_cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x) + 0.0:.12g}"  # prints -0.0 as 0
    if isinstance(x, (list, tuple)):
        return canonical_json(x)
    return str(x)


@dataclass
class Verdict:
    passed: bool
    value: Any
    tolerance: Any
    note: str = ""

    def to_dict(self) -> dict:
        return _plain({"passed": self.passed, "value": self.value, "tolerance": self.tolerance,
                       "note": self.note})


@dataclass
class ExperimentTable:
    """One experiment's output.

    ``statement`` names the result being instantiated. Columns listed in
    ``lower_bound_columns`` hold optimiser estimates of a supremum and are
    flagged as lower bounds in every export.
    """

    statement: str
    model: str
    params: dict
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    verdicts: dict[str, Verdict] = field(default_factory=dict)
    seed: int = 0
    config_hash: str = ""
    lower_bound_columns: tuple[str, ...] = ()
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.config_hash:
            self.config_hash = config_hash({"statement": self.statement, "model": self.model,
                                            "params": self.params, "seed": self.seed})

    def add_row(self, **values) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        self.rows.append({c: values.get(c) for c in self.columns})

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def verdict(self, name: str, passed: bool, value: Any, tolerance: Any, note: str = "") -> None:
        self.verdicts[name] = Verdict(bool(passed), value, tolerance, note)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.columns) + ["seed", "config_hash"])
        for r in self.rows:
            w.writerow([format_cell(r[c]) for c in self.columns] + [self.seed, self.config_hash])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return _plain({
            "statement": self.statement,
            "model": self.model,
            "params": self.params,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "columns": self.columns,
            "lower_bound_columns": list(self.lower_bound_columns),
            "rows": self.rows,
            "fits": self.fits,
            "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            "passed": self.passed,
            "notes": self.notes,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def summary(self) -> str:
        flags = ", ".join(f"{k}={'pass' if v.passed else 'FAIL'}" for k, v in self.verdicts.items())
        return f"{self.statement} [{self.model}]: {'PASS' if self.passed else 'FAIL'} ({flags})"
