"""Acceptance criteria, one test each; every test records a PASS/FAIL line for the summary."""
import filecmp
import math
import time

import numpy as np
import pytest

from openlattice import superop as S
from openlattice.experiments import (area_law_scan, boundary_evolution_experiment, fit_rapid_mixing,
                                     localization_experiment, run_config, smoke_config_path,
                                     telescoping_decomposition)
from openlattice.family import assemble_closed, check_frustration_free
from openlattice.linalg import (ket_to_dm, partial_trace_positions, purity, random_density_matrix,
                                random_pure_state, trace_norm)
from openlattice.measures import (Bipartition, entropy, fannes_audenaert_bound, mutual_info_continuity_bound,
                                  mutual_information, pinsker_chain_check)
from openlattice.models import MODELS, build_model, gibbs_weights, glauber_ising

CHAINS = range(1, 11)
BOXES = [(2, 2), (2, 3), (3, 3)]


def zoo(max_sites: int, boxes=BOXES):
    """Every model at every chain length and grid up to ``max_sites`` sites."""
    for name in MODELS:
        for size in [n for n in CHAINS if n <= max_sites] + [b for b in boxes if b[0] * b[1] <= max_sites]:
            n_sites = size if isinstance(size, int) else size[0] * size[1]
            if name == "frustrated_contrast" and n_sites < 3:
                continue
            yield name, size, build_model(name, size=size)


def random_operator(d, rng):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


# ---------------------------------------------------------------------------
# 1. generator validity


def test_criterion_01_generator_validity(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_trace, worst_evolve, systems = 0.0, 0.0, 0
    for name, size, fam in zoo(10):
        gen = assemble_closed(fam)
        d = gen.hilbert_dim
        if d <= 256:
            for _ in range(100):
                x = random_operator(d, rng)
                worst_trace = max(worst_trace, abs(np.trace(S.apply(gen, x))))
        else:
            # tr L(X) = <L^+(I), X>: one adjoint application, then 100 random rank-4 inputs
            w = S.unvec(gen.matrix.conj().T @ S.vec(np.eye(d)), d)
            for _ in range(100):
                u = rng.standard_normal((d, 4)) + 1j * rng.standard_normal((d, 4))
                v = rng.standard_normal((d, 4)) + 1j * rng.standard_normal((d, 4))
                worst_trace = max(worst_trace, abs(np.sum(u * (w.conj() @ v.conj()))))
            x = random_operator(d, rng)
            worst_trace = max(worst_trace, abs(np.trace(S.apply(gen, x))))
        rho = 0.5 * ket_to_dm(random_pure_state(d, rng)) + 0.5 * random_density_matrix(d, rng, rank=2)
        out = S.evolve(gen, rho, 0.2, validate=False)
        herm = (out + out.conj().T) / 2
        worst_evolve = max(worst_evolve, abs(np.trace(out) - 1), -np.linalg.eigvalsh(herm).min(),
                           np.abs(out - herm).max())
        systems += 1
    elapsed = time.perf_counter() - start
    ok = worst_trace <= 1e-10 and worst_evolve <= 1e-9 and elapsed < 60
    acceptance(1, "generator validity", ok,
               f"{systems} systems, max |tr L(X)| {worst_trace:.1e}, evolve defect {worst_evolve:.1e}, "
               f"{elapsed:.0f} s")
    assert ok


# ---------------------------------------------------------------------------
# 2. Krylov against dense expm


def test_criterion_02_krylov_matches_dense(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst, systems = 0.0, 0
    for name, size, fam in zoo(6, boxes=[(2, 2)]):
        gen = assemble_closed(fam)
        d = gen.hilbert_dim
        times = (1.0,) if d == 64 else (0.3, 2.0)
        states = [random_density_matrix(d, rng), ket_to_dm(random_pure_state(d, rng))]
        for t in times:
            prop = S.dense_propagator(gen, t)
            for rho in states:
                ref = S.unvec(prop @ S.vec(rho), d)
                worst = max(worst, trace_norm(S.propagate(gen, rho, t, method="krylov") - ref))
        systems += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 120
    acceptance(2, "Krylov evolve matches dense expm", ok,
               f"{systems} systems up to operator dim 4096, max error {worst:.1e}, {elapsed:.0f} s")
    assert ok


# ---------------------------------------------------------------------------
# 3. fixed points


def brute_boltzmann(n, beta, h, pin):
    w = []
    for k in range(2 ** n):
        s = [1 - 2 * ((k >> (n - 1 - j)) & 1) for j in range(n)]
        e = -sum(s[j] * s[j + 1] for j in range(n - 1)) - h * sum(s) - pin * (s[0] + s[-1])
        w.append(math.exp(-beta * e))
    w = np.array(w)
    return w / w.sum()


def test_criterion_03_fixed_points(acceptance):
    worst_res, worst_purity, worst_gibbs = 0.0, 0.0, 0.0
    for name, size, fam in zoo(8, boxes=[(2, 2), (2, 3)]):
        gen = assemble_closed(fam)
        rho, _ = S.fixed_point(gen, check_unique=False)
        worst_res = max(worst_res, trace_norm(S.apply(gen, rho)))
        if name in ("product_damping", "stabilizer_pump"):
            worst_purity = max(worst_purity, 1 - purity(rho))
    for n in (1, 2, 3, 4):
        for beta, h, boundary in ((0.5, 0.0, "free"), (0.9, 0.3, "free"), (0.4, 0.0, 1), (0.7, -0.2, -1)):
            fam = glauber_ising(n, beta=beta, h=h, boundary=boundary)
            rho, _ = S.fixed_point(assemble_closed(fam))
            pin = 0 if boundary == "free" else boundary
            ref = brute_boltzmann(n, beta, h, pin)
            worst_gibbs = max(worst_gibbs, np.abs(rho - np.diag(ref)).max())
    fam = glauber_ising((2, 2), beta=0.6, boundary=1)
    rho, _ = S.fixed_point(assemble_closed(fam))
    worst_gibbs = max(worst_gibbs, np.abs(rho - np.diag(gibbs_weights(fam.lattice, beta=0.6, pin=1))).max())
    ok = worst_res <= 1e-10 and worst_purity <= 1e-8 and worst_gibbs <= 1e-10
    acceptance(3, "fixed-point correctness", ok,
               f"max residual {worst_res:.1e}, purity defect {worst_purity:.1e}, Gibbs error {worst_gibbs:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 4. frustration freeness


def test_criterion_04_frustration_freeness(acceptance):
    ff_worst, frustrated_min = 0.0, math.inf
    sizes = [2, 3, 4, 5, 6, (2, 2), (2, 3)]
    families = [("product_damping", {}), ("stabilizer_pump", {}), ("glauber_ising", {"beta": 0.5}),
                ("glauber_ising", {"beta": 0.8, "h": 0.3}), ("glauber_ising", {"beta": 0.5, "boundary": 1}),
                ("glauber_ising", {"beta": 0.5, "boundary": -1})]
    for name, params in families:
        for size in sizes:
            ff_worst = max(ff_worst, check_frustration_free(build_model(name, size=size, **params)).max_residual)
    for size in [3, 4, 5, 6, (2, 2), (2, 3)]:
        frustrated_min = min(frustrated_min,
                             check_frustration_free(build_model("frustrated_contrast", size=size)).max_residual)
    ok = ff_worst <= 1e-10 and frustrated_min > 0.01
    acceptance(4, "frustration freeness", ok,
               f"max residual {ff_worst:.1e} on frustration-free models, frustrated control min {frustrated_min:.3f}")
    assert ok


# ---------------------------------------------------------------------------
# 5. inequality suite


def test_criterion_05_inequalities(acceptance):
    rng = np.random.default_rng(5)
    slack = 1e-9
    failures, count = 0, 0
    for k in range(500):
        da, db = (4, 4) if k % 2 == 0 else (4, 8)
        d = da * db
        rank = 1 + k % d if k % 5 else 1
        rho = random_density_matrix(d, rng, rank=rank)
        split = Bipartition.split(da, db)
        rep = pinsker_chain_check(rho, split, restarts=4, seed=k)
        ok = rep.C <= rep.T + slack and rep.T <= 2 * math.sqrt(rep.I) + slack and rep.fannes_mutual_ok
        # entropy continuity between rho and a nearby random mixture (d >= 16)
        p = rng.uniform(0.01, 0.45)
        sigma = (1 - p) * rho + p * random_density_matrix(d, rng)
        delta = trace_norm(rho - sigma)
        ok &= abs(entropy(rho) - entropy(sigma)) <= fannes_audenaert_bound(delta, d) + slack
        # mutual-information continuity on the same pair
        ok &= abs(mutual_information(rho, split) - mutual_information(sigma, split)) <= \
            mutual_info_continuity_bound(delta, da) + slack
        # and on the pair (rho_AB, rho_A x rho_B) when it is close enough
        if rep.T < 1:
            ok &= abs(entropy(rho) - entropy(np.kron(partial_trace_positions(rho, [da, db], [0]),
                                                     partial_trace_positions(rho, [da, db], [1])))) <= \
                fannes_audenaert_bound(rep.T, d) + slack
        failures += not ok
        count += 1
    bell = ket_to_dm(np.array([1, 0, 0, 1]) / math.sqrt(2))
    rep = pinsker_chain_check(bell, Bipartition.split(2, 2))
    bell_ok = rep.T == pytest.approx(1.5, abs=1e-12) and rep.I == pytest.approx(2, abs=1e-12) \
        and rep.C >= 1 - 1e-6
    ok = failures == 0 and count >= 500 and bell_ok
    acceptance(5, "inequality suite", ok,
               f"{count} states, {failures} violations, Bell (T, I, C) = ({rep.T:.12g}, {rep.I:.12g}, {rep.C:.9f})")
    assert ok


# ---------------------------------------------------------------------------
# 6. rapid mixing


def test_criterion_06_rapid_mixing(acceptance):
    start = time.perf_counter()
    fit = fit_rapid_mixing("product_damping", sizes=(1, 2, 3, 4, 5, 6), samples=16, seed=6)
    elapsed = time.perf_counter() - start
    ok = (0.45 <= fit.gamma <= 0.55 and fit.t_mix_slope is not None and fit.t_mix_slope > 0
          and fit.t_mix_r2 >= 0.95 and elapsed < 300)
    acceptance(6, "rapid-mixing fit", ok,
               f"gamma {fit.gamma:.4f}, t_mix slope {fit.t_mix_slope:.3f} per log N (R^2 {fit.t_mix_r2:.4f}), "
               f"{elapsed:.0f} s")
    assert ok


# ---------------------------------------------------------------------------
# 7. localization


def test_criterion_07_localization(acceptance):
    start = time.perf_counter()
    tab = localization_experiment(glauber_ising(8, beta=0.5, boundary=1), [3, 4], (1, 2, 3), min_drop=10)
    elapsed = time.perf_counter() - start
    d = tab.column("difference")
    nonincreasing = all(b <= a + 1e-12 for a, b in zip(d, d[1:]))
    drop_ok = d[2] == 0 or d[0] / d[2] >= 10
    ok = nonincreasing and drop_ok and tab.passed and elapsed < 600
    acceptance(7, "localization of fixed-point marginals", ok,
               "differences " + ", ".join(f"{v:.3e}" for v in d) + f", {elapsed:.0f} s")
    assert ok


# ---------------------------------------------------------------------------
# 8. boundary evolution


def test_criterion_08_boundary_evolution(acceptance):
    cases = [(build_model("product_damping", size=5), [2]), (build_model("stabilizer_pump", size=6), [2]),
             (glauber_ising(6, beta=0.5), [2, 3]), (glauber_ising(8, beta=0.5, boundary=1), [3, 4])]
    worst_t0 = 0.0
    for fam, a in cases:
        tab = boundary_evolution_experiment(fam, a, 1, [0.0, 0.5])
        worst_t0 = max(worst_t0, max(r["value"] for r in tab.rows if r["t"] == 0.0))
    fam = glauber_ising(9, beta=0.5, boundary=1)

    def diff(m):
        tab = boundary_evolution_experiment(fam, [4], m, [0.0, 0.5])
        return next(r["value"] for r in tab.rows if r["quantity"] == "difference" and r["t"] == 0.5)

    d1, d3 = diff(1), diff(3)
    ratio = d1 / d3 if d3 > 0 else math.inf
    ok = worst_t0 <= 1e-10 and ratio >= 5
    acceptance(8, "boundary-evolution localization", ok,
               f"max t=0 value {worst_t0:.1e}, Glauber t=0.5 difference m=1 {d1:.3e}, m=3 {d3:.3e}, "
               f"ratio {ratio:.0f}")
    assert ok


# ---------------------------------------------------------------------------
# 9. area law


def test_criterion_09_area_law(acceptance):
    stab = area_law_scan("stabilizer_pump", [4, 5, 6, 7, 8])
    s_err = np.abs(stab.column("S") - 1).max()
    i_err = np.abs(stab.column("I") - 2).max()
    beta = 0.5
    # exact thermal bound for a single cut bond: I <= 2 beta J / ln 2 bits
    bound = 2 * beta / math.log(2)
    glauber = area_law_scan(lambda n: glauber_ising(n, beta=beta), list(range(4, 11)), i_bound=bound)
    i_vals = glauber.column("I")
    ok = s_err <= 1e-9 and i_err <= 1e-9 and glauber.passed and i_vals.max() <= bound
    acceptance(9, "area-law values", ok,
               f"stabilizer {len(stab.rows)} cuts, max |S-1| {s_err:.1e}, max |I-2| {i_err:.1e}; "
               f"Glauber max I {i_vals.max():.4f} <= {bound:.4f} over {len(glauber.rows)} cuts")
    assert ok


# ---------------------------------------------------------------------------
# 10. telescoping


def test_criterion_10_telescoping(acceptance):
    cases = [(build_model("product_damping", size=5), [2]), (build_model("stabilizer_pump", size=6), [0, 1, 2]),
             (build_model("stabilizer_pump", size=6), [2, 3]), (glauber_ising(8, beta=0.5, boundary=1), [3, 4]),
             (glauber_ising(7, beta=0.5), [3])]
    worst, dp_ok, cont_ok = 0.0, True, True
    for fam, a in cases:
        _, tab = telescoping_decomposition(fam, a, n0=1)
        worst = max(worst, tab.verdicts["telescoping_identity"].value)
        dp_ok &= tab.verdicts["data_processing"].passed
        cont_ok &= tab.verdicts["continuity"].passed
    ok = worst <= 1e-9 and dp_ok and cont_ok
    acceptance(10, "telescoping identity", ok,
               f"{len(cases)} decompositions, max identity error {worst:.1e}, data processing "
               f"{'holds' if dp_ok else 'violated'}")
    assert ok


# ---------------------------------------------------------------------------
# 11. reproducibility


def test_criterion_11_reproducibility(acceptance, tmp_path):
    start = time.perf_counter()
    first = run_config(smoke_config_path(), out=str(tmp_path / "a"))
    mid = time.perf_counter()
    second = run_config(smoke_config_path(), out=str(tmp_path / "b"))
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    _, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", csvs, shallow=False)
    runtime = mid - start
    ok = (first.exit_code == second.exit_code == 0 and len(csvs) == 6 and not mismatch and not errors
          and runtime < 60)
    acceptance(11, "reproducible smoke run", ok,
               f"{len(csvs)} tables, {len(mismatch)} differing CSVs, smoke run {runtime:.1f} s")
    assert ok
