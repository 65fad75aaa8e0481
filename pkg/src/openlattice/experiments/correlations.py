"""Correlation decay, area-law scans and the telescoping decomposition."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..errors import DomainError, HypothesisViolation
from ..family import UniformFamily, assemble_closed, assemble_restricted, check_frustration_free
from ..lattice import Lattice, Region, fatten, fatten_balls, region_distance
from ..linalg import partial_trace, purity, tensor_regions, trace_norm
from ..measures import (Bipartition, covariance_correlation, entropy, mutual_information,
                        mutual_info_continuity_bound, trace_distance_correlation)
from ..superop import fixed_point, fixed_point_method, propagate
from .common import as_region, family_factory, family_params, region_label, unique_fixed_point
from .fits import classify_decay, loglinear_fit
from .localization import _tau
from .table import ExperimentTable

SLACK = 1e-9


def _split_intermediate(family: UniformFamily, a: Region, b: Region, rho_ab: np.ndarray, d_ab: int):
    """Largest ``s <= d_AB / 2`` at which ``(A u B)(s)`` is two balls, one around ``A`` and
    one around ``B``; returns ``(s, ||rho_AB - rho_A^s (x) rho_B^s||_1, (rho_A^s, rho_B^s))``
    or ``None``. ``rho_A^s`` is the ``A`` marginal of the closed fixed point on ``A``'s ball
    and ``rho_AB`` is in site order.
    """
    lattice = family.lattice
    ab = a | b
    for s in range(d_ab // 2, -1, -1):
        balls = fatten_balls(lattice, ab, s)
        if len(balls) != 2:
            continue
        regions = [fatten(lattice, lattice.region([c]), r) for c, r in balls]
        ra = next((g for g in regions if a.issubset(g)), None)
        rb = next((g for g in regions if b.issubset(g)), None)
        if ra is None or rb is None or ra == rb:
            continue
        sa = partial_trace(unique_fixed_point(family, ra), a, ra)
        sb = partial_trace(unique_fixed_point(family, rb), b, rb)
        product = tensor_regions([(a, sa), (b, sb)], ab)
        return s, trace_norm(rho_ab - product), (sa, sb)
    return None


def correlation_decay_scan(family: UniformFamily, A, B_list: Sequence, seed: int = 0,
                           restarts: int = 8) -> ExperimentTable:
    """``T``, ``C`` and ``I`` between ``A`` and each ``B`` in the closed fixed point.

    Also reports the split intermediate ``||rho_AB - rho_A^s (x) rho_B^s||_1``
    and checks ``T <= ||rho_AB - rho_A^s rho_B^s||_1 + ||rho_A - rho_A^s||_1 +
    ||rho_B - rho_B^s||_1`` together with ``C <= T <= 2 sqrt(I)``.
    """
    a = as_region(family, A)
    rho = unique_fixed_point(family)
    full = family.lattice.full()
    table = ExperimentTable(
        "correlation-decay", family.name,
        {**family_params(family), "A": region_label(a), "B_list": [region_label(as_region(family, b))
                                                                    for b in B_list]},
        ["B", "distance", "T", "C", "I", "split_s", "split_difference"], seed=seed,
        lower_bound_columns=("C",))
    chain_ok, triangle_ok = True, True
    dists, ts, is_ = [], [], []
    for k, b_sites in enumerate(B_list):
        b = as_region(family, b_sites)
        if not a.isdisjoint(b):
            raise DomainError("A and B must be disjoint")
        d_ab = region_distance(a, b)
        ab = a | b
        rho_ab = partial_trace(rho, ab, full)
        split = Bipartition.of(ab, a, b)
        t_val = trace_distance_correlation(rho_ab, split)
        c_val = covariance_correlation(rho_ab, split, restarts=restarts, seed=seed + k)
        i_val = mutual_information(rho_ab, split)
        inter = _split_intermediate(family, a, b, rho_ab, d_ab)
        if inter is None:
            table.notes.append(f"B={region_label(b)}: no split of (A u B)(s) for s <= {d_ab / 2}; row skipped")
            continue
        s, diff, (sa, sb) = inter
        side = trace_norm(partial_trace(rho, a) - sa) + trace_norm(partial_trace(rho, b) - sb)
        triangle_ok &= t_val <= diff + side + SLACK
        chain_ok &= c_val <= t_val + SLACK and t_val <= 2 * math.sqrt(i_val) + SLACK
        table.add_row(B=region_label(b), distance=d_ab, T=t_val, C=c_val, I=i_val, split_s=s,
                      split_difference=diff)
        dists.append(d_ab)
        ts.append(t_val)
        is_.append(i_val)
    t_fit, i_fit = loglinear_fit(dists, ts), loglinear_fit(dists, is_)
    table.fits = {
        "T_loglinear": t_fit.to_dict() if t_fit else None,
        "I_loglinear": i_fit.to_dict() if i_fit else None,
        "T_decay_class": classify_decay(dists, ts),
        "I_decay_class": classify_decay(dists, is_),
        "I_to_T_rate_ratio": (i_fit.slope / t_fit.slope) if t_fit and i_fit and t_fit.slope else None,
    }
    table.verdict("pinsker_chain", chain_ok, "C <= T <= 2 sqrt(I)", SLACK)
    table.verdict("split_triangle", triangle_ok, "T <= split + marginal errors", SLACK)
    return table


def _cut_edges(lattice: Lattice, a: Region) -> int:
    return sum(1 for x in a for y in lattice.neighbors(x) if lattice.contains(y) and y not in a)


def _inner_boundary(lattice: Lattice, a: Region) -> int:
    return sum(1 for x in a if any(lattice.contains(y) and y not in a for y in lattice.neighbors(x)))


def left_blocks(lattice: Lattice) -> list[Region]:
    """Interior cuts of a chain: ``[0, k)`` for ``k = 1 .. N-1``."""
    if lattice.dimension != 1:
        raise DomainError("default cuts are defined for chains; pass explicit cuts on grids")
    n = lattice.num_sites
    return [lattice.region(range(k)) for k in range(1, n)]


def area_law_scan(family, sizes: Sequence, cuts=None, seed: int = 0,
                  i_bound: float | None = None, pure_tol: float = 1e-8) -> ExperimentTable:
    """``S(rho_A)`` (pure fixed points) and ``I(A:A^c)`` for every size and cut.

    ``cuts`` maps a size to a list of regions (site lists); the default is
    every left block of a chain. The fits report the smallest constants with
    ``I <= c |dA|`` and ``I <= c |dA| log2(1 + |A|)`` over the grid.
    """
    build = family_factory(family)
    table = None
    ratios_area, ratios_log = [], []
    pure_ok, bound_ok = True, True
    worst_i = 0.0
    for size in sizes:
        fam = build(size)
        if table is None:
            table = ExperimentTable(
                "area-law", fam.name,
                {**{k: v for k, v in family_params(fam).items() if k != "size"}, "sizes": list(sizes)},
                ["size", "A", "A_sites", "boundary", "cut_edges", "S", "I", "pure"], seed=seed)
        rho = unique_fixed_point(fam)
        lattice = fam.lattice
        pure = purity(rho) >= 1 - pure_tol
        size_cuts = left_blocks(lattice) if cuts is None else [as_region(fam, c) for c in cuts(size)]
        full = lattice.full()
        for a in size_cuts:
            split = Bipartition.of(full, a)
            i_val = mutual_information(rho, split)
            s_val = entropy(partial_trace(rho, a)) if pure else None
            if pure:
                pure_ok &= abs(i_val - 2 * s_val) <= SLACK
            bnd = _inner_boundary(lattice, a)
            ratios_area.append(i_val / bnd)
            ratios_log.append(i_val / (bnd * math.log2(1 + len(a))))
            worst_i = max(worst_i, i_val)
            table.add_row(size=size if isinstance(size, int) else list(size), A=region_label(a),
                          A_sites=len(a), boundary=bnd, cut_edges=_cut_edges(lattice, a), S=s_val,
                          I=i_val, pure=pure)
    table.fits = {"c_area": max(ratios_area, default=0.0), "c_area_log": max(ratios_log, default=0.0),
                  "max_I": worst_i}
    table.verdict("pure_identity", pure_ok, "I = 2 S on pure fixed points", SLACK)
    if i_bound is not None:
        table.verdict("I_bounded", worst_i <= i_bound + SLACK, worst_i, i_bound)
    return table


@dataclass
class TelescopingSchedule:
    n0: int
    t_n: list
    eps_n: list

    def to_dict(self) -> dict:
        return asdict(self)


def _mutual(rho: np.ndarray, a: Region, region: Region) -> float:
    if region == a:
        return 0.0
    return mutual_information(rho, Bipartition.of(region, a))


def _independent_method(gen) -> str:
    return {"dense": "lu", "lu": "gmres", "gmres": "lu"}[fixed_point_method(gen)]


def telescoping_decomposition(family: UniformFamily, A, n0: int = 1, L: int | None = None,
                              t_min: float = 1.0, kappa: float = 1.0, tau="mixed", seed: int = 0,
                              identity_tol: float = 1e-9):
    """``I(A:A^c)`` under ``rho_inf^n`` (closed fixed point on ``A(n)``) for ``n = n0 .. L``.

    Checks the telescoping identity against a value computed from an
    independent solve of the ``A(L)`` fixed point (a different solver path),
    the data-processing step for ``T_{t_n}`` restricted away from ``A``, and
    the mutual-information continuity bound; returns the schedule and table.
    The schedule is ``t_n = t_min + kappa log nu(n)``.
    """
    a = as_region(family, A)
    lattice = family.lattice
    if L is None:
        L = n0
        while fatten(lattice, a, L) != lattice.full():
            L += 1
    if n0 < 0 or L < n0:
        raise DomainError("need 0 <= n0 <= L")
    ff = check_frustration_free(family, fatten(lattice, a, L))
    if not ff.passed:
        raise HypothesisViolation(f"{family.name} is not frustration free", max_residual=ff.max_residual)
    rng = np.random.default_rng(seed)
    regions = {n: fatten(lattice, a, n) for n in range(n0, L + 1)}
    states = {n: unique_fixed_point(family, regions[n]) for n in regions}
    values = {n: _mutual(states[n], a, regions[n]) for n in regions}
    gen_l = assemble_closed(family, regions[L])
    direct_rho, _ = fixed_point(gen_l, check_unique=False, method=_independent_method(gen_l))
    direct = _mutual(direct_rho, a, regions[L])

    table = ExperimentTable(
        "area-law-telescoping", family.name,
        {**family_params(family), "A": region_label(a), "n0": n0, "L": L, "t_min": t_min,
         "kappa": kappa, "tau": tau if isinstance(tau, str) else "array"},
        ["n", "region_sites", "I", "increment", "t_n", "eps_n", "I_evolved", "continuity_gap",
         "continuity_bound"], seed=seed)
    t_n, eps_n = [], []
    dp_ok, cont_ok = True, True
    total = values[n0]
    for n in range(n0, L + 1):
        row = {"n": n, "region_sites": len(regions[n]), "I": values[n]}
        if n < L:
            inc = values[n + 1] - values[n]
            total += inc
            t = t_min + kappa * math.log(family.decay.nu(n))
            nxt, cur = regions[n + 1], regions[n]
            ring = nxt - cur
            start = states[n] if ring.is_empty else tensor_regions(
                [(cur, states[n]), (ring, _tau(ring, tau, rng))], nxt)
            gen = assemble_restricted(family, nxt, a, n + 1)
            evolved = propagate(gen, start, t, tol=1e-12)
            evolved = (evolved + evolved.conj().T) / 2
            eps = trace_norm(states[n + 1] - evolved) / len(a)
            i_evolved = _mutual(evolved, a, nxt)
            dp_ok &= i_evolved <= values[n] + SLACK
            delta = eps * len(a)
            gap = abs(values[n + 1] - i_evolved)
            bound = mutual_info_continuity_bound(delta, a.dim) if delta < 1 else None
            if bound is not None:
                cont_ok &= gap <= bound + SLACK
            t_n.append(t)
            eps_n.append(eps)
            row.update(increment=inc, t_n=t, eps_n=eps, I_evolved=i_evolved, continuity_gap=gap,
                       continuity_bound=bound)
        table.add_row(**row)
    schedule = TelescopingSchedule(n0, t_n, eps_n)
    err = abs(total - direct)
    monotone = all(e2 <= e1 + SLACK for e1, e2 in zip(eps_n, eps_n[1:]))
    incs = [r["increment"] for r in table.rows if r["increment"] is not None]
    table.fits = {"direct": direct, "telescoped": total, "schedule": schedule.to_dict(),
                  "increment_decay": classify_decay(range(n0, n0 + len(incs)), np.abs(incs))}
    table.verdict("telescoping_identity", err <= identity_tol, err, identity_tol,
                  "base plus increments against an independent solve on A(L)")
    table.verdict("data_processing", dp_ok, "I(T(rho^n x tau)) <= I(rho^n)", SLACK)
    table.verdict("continuity", cont_ok, "|I - I'| <= 6 d log2 dA + 4 hb(d)", SLACK)
    table.verdict("eps_nonincreasing", monotone, eps_n, SLACK)
    return schedule, table
