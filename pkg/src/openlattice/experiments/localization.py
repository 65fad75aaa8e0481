"""Localization of fixed points and of the boundary-driven evolution."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import DomainError, HypothesisViolation
from ..family import (UniformFamily, assemble_closed, assemble_restricted, check_frustration_free,
                      lieb_robinson_velocity)
from ..lattice import Region, fatten, region_distance
from ..linalg import partial_trace, random_pure_state, tensor_regions, trace_norm
from ..superop import propagate
from .common import as_region, check_grid, family_params, region_label, unique_fixed_point
from .fits import classify_decay, loglinear_fit
from .table import ExperimentTable

ZERO = 1e-12


def localization_experiment(family: UniformFamily, A, s_range: Sequence[int] = (1, 2, 3),
                            seed: int = 0, min_drop: float = 1.0) -> ExperimentTable:
    """``||tr_{A^c}(rho_inf - rho_inf^s)||_1`` for ``s`` in ``s_range``.

    ``rho_inf`` is the closed fixed point on the box and ``rho_inf^s`` the one
    on ``A(s)``. Verdicts: the column is nonincreasing in ``s`` and drops by
    at least ``min_drop`` from the first to the last ``s``.
    """
    a = as_region(family, A)
    lattice = family.lattice
    rho = unique_fixed_point(family)
    target = partial_trace(rho, a)
    table = ExperimentTable("fixed-point-localization", family.name,
                            {**family_params(family), "A": region_label(a), "s_range": list(s_range)},
                            ["s", "region", "region_sites", "difference", "delta0_fit"], seed=seed)
    diffs = []
    for s in s_range:
        region = fatten(lattice, a, int(s))
        rho_s = unique_fixed_point(family, region)
        diff = trace_norm(target - partial_trace(rho_s, a, region))
        diffs.append(diff)
        table.add_row(s=int(s), region=region_label(region), region_sites=len(region), difference=diff)
    fit = loglinear_fit(s_range, diffs)
    for row in table.rows:
        row["delta0_fit"] = (math.exp(fit.intercept + fit.slope * row["s"]) if fit else 0.0)
    table.fits = {"loglinear": fit.to_dict() if fit else None,
                  "decay_class": classify_decay(s_range, diffs),
                  "family_decay": {"form": family.decay.form, "mu": family.decay.mu},
                  "size_exponent": 0.0}
    steps = np.diff(diffs)
    worst = float(steps.max()) if steps.size else 0.0
    table.verdict("nonincreasing", worst <= ZERO, worst, ZERO, "largest increase between consecutive s")
    if diffs[0] <= ZERO:
        table.verdict("drop", True, math.inf, min_drop, "difference vanishes from the first s")
    else:
        ratio = math.inf if diffs[-1] <= ZERO else diffs[0] / diffs[-1]
        table.verdict("drop", ratio >= min_drop, ratio, min_drop, "first / last difference")
    return table


def _tau(region: Region, kind, rng: np.random.Generator) -> np.ndarray:
    d = region.dim
    if isinstance(kind, np.ndarray):
        if kind.shape != (d, d):
            raise DomainError("tau has the wrong dimension")
        return kind
    if kind == "mixed":
        return np.eye(d, dtype=complex) / d
    if kind == "random":
        psi = random_pure_state(d, rng)
        return np.outer(psi, psi.conj())
    raise DomainError(f"unknown tau {kind!r}; use 'mixed', 'random' or an array")


def localized_initial_state(family: UniformFamily, a: Region, m: int, tau="mixed",
                            rng: np.random.Generator | None = None):
    """``(B, R, rho_inf^m (x) tau)`` with ``B = A(m+1)`` and ``R = B minus A(m)``."""
    lattice = family.lattice
    inner = fatten(lattice, a, m)
    b = fatten(lattice, a, m + 1)
    r = b - inner
    rho_m = unique_fixed_point(family, inner)
    if r.is_empty:
        return b, r, rho_m
    rng = np.random.default_rng(0) if rng is None else rng
    return b, r, tensor_regions([(inner, rho_m), (r, _tau(r, tau, rng))], b)


def boundary_evolution_experiment(family: UniformFamily, A, m: int, t_grid: Sequence[float],
                                  tau="mixed", seed: int = 0, zero_tol: float = 1e-10) -> ExperimentTable:
    """``||(T_t^B - T_t^{B\\A})(rho_inf^m (x) tau)||_1`` and interior term residuals.

    Frustration freeness on ``A(m)`` is checked first. For each time the
    table has one ``difference`` row and one row per bulk term ``Z`` inside
    ``A(m)`` holding ``||M_Z(rho(t))||_1`` with ``rho(t) = T_t^B(rho(0))``.
    """
    a = as_region(family, A)
    if m < 1:
        raise DomainError("m must be a positive integer")
    t_grid = check_grid(t_grid, "t_grid")
    lattice = family.lattice
    inner = fatten(lattice, a, m)
    ff = check_frustration_free(family, inner)
    if not ff.passed:
        raise HypothesisViolation(f"{family.name} is not frustration free on A({m})",
                                  max_residual=ff.max_residual)
    rng = np.random.default_rng(seed)
    b, r, rho0 = localized_initial_state(family, a, m, tau, rng)
    full = assemble_closed(family, b)
    restricted = assemble_restricted(family, b, a, m + 1)
    interior = [t for t in family.bulk_terms(inner)]
    v = lieb_robinson_velocity(family)
    table = ExperimentTable(
        "evolution-localization", family.name,
        {**family_params(family), "A": region_label(a), "m": m, "t_grid": t_grid,
         "tau": tau if isinstance(tau, str) else "array"},
        ["t", "quantity", "term", "dist_to_R", "value", "envelope"], seed=seed)
    diffs, by_dist = [], {}
    for t in t_grid:
        rho_t = propagate(full, rho0, t, tol=1e-12)
        other = propagate(restricted, rho0, t, tol=1e-12)
        diff = trace_norm(rho_t - other)
        diffs.append(diff)
        envelope = math.exp(v * t) - 1 + t
        table.add_row(t=t, quantity="difference", term="", dist_to_R=None, value=diff, envelope=envelope)
        for term in interior:
            dist = region_distance(term.support, r) if not r.is_empty else None
            res = trace_norm(term.apply(rho_t, b))
            table.add_row(t=t, quantity="term_residual", term=term.label, dist_to_R=dist, value=res,
                          envelope=envelope)
            if dist is not None:
                by_dist.setdefault(t, {}).setdefault(dist, []).append(res)
    growth = loglinear_fit(t_grid, diffs) if len(t_grid) >= 2 else None
    decay = {}
    for t, groups in by_dist.items():
        dists = sorted(groups)
        fit = loglinear_fit(dists, [max(groups[k]) for k in dists]) if len(dists) >= 2 else None
        decay[str(t)] = fit.to_dict() if fit else None
    table.fits = {"velocity": v, "difference_growth": growth.to_dict() if growth else None,
                  "residual_decay_in_distance": decay,
                  "B": region_label(b), "R": region_label(r)}
    if 0.0 in t_grid:
        at0 = [row["value"] for row in table.rows if row["t"] == 0.0]
        table.verdict("zero_at_t0", max(at0) <= zero_tol, max(at0), zero_tol,
                      "difference and interior residuals at t = 0")
    return table
