"""Rapid-mixing fits: worst-case distance to the fixed point against time and size."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import HypothesisViolation
from ..family import assemble_closed
from ..linalg import dagger, random_pure_state, trace_norm
from ..superop import Superoperator, fixed_point, propagate, spectral_data
from .common import check_grid, family_factory, family_params
from .fits import affine_fit, crossing_time, fit_mixing_law, r_squared
from .table import ExperimentTable

DEFAULT_T_GRID = tuple(float(t) for t in range(6, 21))


def _sign(x: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(x)
    return (v * np.where(w >= 0, 1.0, -1.0)) @ dagger(v)


def _distance(gen: Superoperator, rho_inf: np.ndarray, psi: np.ndarray, t: float) -> tuple[float, np.ndarray]:
    diff = propagate(gen, np.outer(psi, psi.conj()), t, tol=1e-12) - rho_inf
    diff = (diff + dagger(diff)) / 2
    return trace_norm(diff), diff


def worst_case_distance(gen: Superoperator, rho_inf: np.ndarray, t: float, starts: Sequence[np.ndarray],
                        max_iter: int = 40, tol: float = 1e-10) -> tuple[float, np.ndarray]:
    """Lower-bound estimate of ``sup_rho ||T_t(rho) - rho_inf||_1`` over pure ``rho``.

    With ``W = sign(T_t(psi psi^+) - rho_inf)`` the objective is
    ``<psi|T_t^+(W)|psi> - tr(W rho_inf)``; replacing ``psi`` by the top
    eigenvector of ``T_t^+(W)`` never decreases it.
    """
    best, best_psi = -1.0, starts[0]
    for psi in starts:
        value, diff = _distance(gen, rho_inf, psi, t)
        for _ in range(max_iter):
            back = propagate(gen, _sign(diff), t, tol=1e-12, adjoint=True)
            w, v = np.linalg.eigh((back + dagger(back)) / 2)
            cand = v[:, -1]
            new, new_diff = _distance(gen, rho_inf, cand, t)
            if new <= value * (1 + tol):
                break
            psi, value, diff = cand, new, new_diff
        if value > best:
            best, best_psi = value, psi
    return best, best_psi


def _basis_starts(d: int) -> list[np.ndarray]:
    first, last = np.zeros(d, complex), np.zeros(d, complex)
    first[0], last[-1] = 1, 1
    return [first, last, np.ones(d, complex) / math.sqrt(d)]


@dataclass
class RapidMixingFit:
    """``D(t, N) ~ c N^delta exp(-gamma t)`` plus mixing times ``t_mix(eps, N)``."""

    c: float
    gamma: float
    delta: float
    residual: float
    envelope_c: float
    sizes: list
    t_grid: list
    distances: list  # distances[i][k] at sizes[i], t_grid[k]
    t_mix: dict
    epsilon: float
    t_mix_slope: float | None
    t_mix_intercept: float | None
    t_mix_r2: float | None
    spectral_gaps: dict
    table: ExperimentTable | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "table"}
        out["distances_are_lower_bounds"] = True
        return out


def fit_rapid_mixing(family, sizes: Sequence = (1, 2, 3, 4, 5, 6), t_grid: Sequence[float] = DEFAULT_T_GRID,
                     samples: int = 16, seed: int = 0, epsilon: float = 1e-3,
                     max_iter: int = 40) -> RapidMixingFit:
    """Measure worst-case distances on ``t_grid`` for each size and fit the mixing law.

    ``family`` is a model name, a ``size -> UniformFamily`` callable or a
    family whose spec is rebuilt at every size. Starts per time: basis and
    uniform superposition seeds, ``samples`` random pure states and the best
    state of the previous time.
    """
    build = family_factory(family)
    t_grid = check_grid(t_grid, "t_grid")
    rng = np.random.default_rng(seed)
    distances, gaps, t_mix = [], {}, {}
    name, params = None, {}
    for size in sizes:
        fam = build(size)
        name, params = fam.name, family_params(fam)
        gen = assemble_closed(fam)
        spec = spectral_data(gen)
        if spec.zero_multiplicity != 1 or not spec.peripheral_ok:
            raise HypothesisViolation(
                f"{fam.name} at size {size}: fixed point not unique or peripheral spectrum present",
                zero_multiplicity=spec.zero_multiplicity, peripheral_ok=spec.peripheral_ok)
        rho_inf, _ = fixed_point(gen, check_unique=False)
        d = gen.hilbert_dim
        randoms = [random_pure_state(d, rng) for _ in range(samples)]
        row, warm = [], None
        for t in t_grid:
            starts = _basis_starts(d) + randoms + ([] if warm is None else [warm])
            value, warm = worst_case_distance(gen, rho_inf, t, starts, max_iter)
            row.append(value)
        distances.append(row)
        gaps[str(size)] = spec.spectral_gap
        t_mix[str(size)] = crossing_time(t_grid, row, epsilon)

    n_sites = [build(s).lattice.num_sites for s in sizes]
    nn = np.repeat(n_sites, len(t_grid))
    tt = np.tile(t_grid, len(sizes))
    law = fit_mixing_law(nn, tt, np.ravel(distances))

    known = [(n, t_mix[str(s)]) for n, s in zip(n_sites, sizes) if t_mix[str(s)] is not None]
    slope = intercept = r2 = None
    if len(known) >= 2:
        x = np.log([k[0] for k in known])
        y = [k[1] for k in known]
        line = affine_fit(x, y)
        slope, intercept, r2 = line.slope, line.intercept, r_squared(x, y, line)

    table = ExperimentTable(
        "rapid-mixing", name or str(family),
        {**params, "sizes": list(sizes), "t_grid": t_grid, "samples": samples, "epsilon": epsilon},
        ["size", "sites", "t", "distance", "fitted", "spectral_gap"], seed=seed,
        lower_bound_columns=("distance",))
    for i, size in enumerate(sizes):
        for k, t in enumerate(t_grid):
            fitted = law.c * n_sites[i] ** law.delta * math.exp(-law.gamma * t)
            table.add_row(size=size if isinstance(size, int) else list(size), sites=n_sites[i], t=t,
                          distance=distances[i][k], fitted=fitted, spectral_gap=gaps[str(size)])
    fit = RapidMixingFit(law.c, law.gamma, law.delta, law.residual, law.c * math.exp(law.max_excess),
                         list(sizes), t_grid, distances, t_mix, epsilon, slope, intercept, r2, gaps, table)
    table.fits = fit.to_dict()
    table.verdict("gamma_positive", law.gamma > 0, law.gamma, "> 0")
    table.verdict("t_mix_defined", len(known) == len(sizes), len(known), len(sizes),
                  "mixing time reached inside the time grid for every size")
    if len(sizes) >= 2 and slope is not None:
        table.verdict("t_mix_slope_positive", slope > 0, slope, "> 0")
    return fit
