import math

import numpy as np
import pytest

from openlattice import superop as S
from openlattice.errors import DomainError, ResourceError
from openlattice.family import (DecayModel, LocalTerm, UniformFamily, assemble_closed, assemble_open,
                                assemble_restricted, assemble_terms, boundary_decay_check,
                                boundary_decay_from_norms, check_frustration_free, fit_polynomial_envelope,
                                lieb_robinson_velocity, restricted_terms)
from openlattice.lattice import Lattice, boundary_layer, fatten
from openlattice.linalg import embed, kron, partial_trace, random_density_matrix
from openlattice.models import (LOWER, X, Z, frustrated_contrast, glauber_ising, product_damping_chain,
                                stabilizer_pump)

I2 = np.eye(2)


def empty_family(n=3):
    return UniformFamily("empty", Lattice.chain(n), lambda lat: [])


def test_damping_open_generator_is_sum_of_embedded_dampers():
    fam = product_damping_chain(3)
    g = assemble_open(fam)
    ops = [embed(LOWER, fam.lattice.region([k])) for k in range(3)]
    assert np.allclose(g.dense(), S.lindblad_generator(None, ops).dense())


def test_empty_family_is_zero():
    g = assemble_open(empty_family())
    assert g.matrix.nnz == 0 and g.hilbert_dim == 8


def test_stabilizer_pump_term_by_term():
    fam = stabilizer_pump(3)
    stabs = [kron(X, Z, I2), kron(Z, X, Z), kron(I2, Z, X)]
    zs = [kron(Z, I2, I2), kron(I2, Z, I2), kron(I2, I2, Z)]
    ref = sum(S.lindblad_generator(None, [c @ (np.eye(8) - s) / 2]).dense() for c, s in zip(zs, stabs))
    assert np.allclose(assemble_open(fam).dense(), ref)


def test_closed_equals_open_without_boundary_rule():
    fam = stabilizer_pump(3)
    assert np.allclose(assemble_closed(fam).dense(), assemble_open(fam).dense())


def test_glauber_boundary_difference_is_the_boundary_census():
    fam = glauber_ising(4, beta=0.8, boundary=1)
    box = fam.lattice.full()
    bnd = fam.boundary_terms(box)
    diff = assemble_closed(fam).dense() - assemble_open(fam).dense()
    assert np.allclose(diff, assemble_terms(bnd, box).dense())
    assert {t.label for t in bnd} == {"edge-glauber(0,)", "edge-glauber(3,)"}
    for t in bnd:
        assert t.support.issubset(boundary_layer(fam.lattice, box, t.depth))
        # the resampled spin itself sits in the depth-1 layer
        assert t.depth <= fam.interaction_range
    # outside the layer of depth 2 the two generators coincide term by term
    open_labels = {t.label for t in fam.bulk_terms(box)}
    closed_labels = {t.label for t in fam.bulk_terms(box) + bnd}
    assert closed_labels - open_labels == {t.label for t in bnd}


def test_restricted_census():
    fam = glauber_ising(9, beta=0.5, boundary=1)
    lat = fam.lattice
    a = lat.region([4])
    m = 2
    b = fatten(lat, a, m + 1)
    kept = restricted_terms(fam, b, a, m + 1)
    rest = set(b.sites) - set(a.sites)
    expected = [t for t in fam.bulk_terms(b) if set(t.support.sites) <= rest]
    expected += [t for t in fam.boundary_terms(b) if t.depth <= m + 1 and set(t.support.sites) <= rest]
    assert sorted(t.label for t in kept) == sorted(t.label for t in expected)
    assert all(t.support.isdisjoint(a) for t in kept)
    g = assemble_restricted(fam, b, a, m + 1)
    assert np.allclose(g.dense() if g.dim <= 1024 else 0, assemble_terms(expected, b).dense()
                       if g.dim <= 1024 else 0)


def test_lieb_robinson_velocity_examples():
    fam = product_damping_chain(3)
    w = fam.bulk_terms()[0].strength
    assert lieb_robinson_velocity(fam, 1.0) == pytest.approx(w)
    assert fam.decay.v == pytest.approx(w)
    fam = frustrated_contrast(4)
    w = fam.bulk_terms()[0].strength
    mu = 0.7
    # an interior site lies in two pair terms, |Z| = 2, diam Z = 1
    assert lieb_robinson_velocity(fam, mu) == pytest.approx(2 * w * 2 * math.exp(mu))
    assert lieb_robinson_velocity(empty_family(), 1.0) == 0


def test_lieb_robinson_velocity_monotone_in_mu():
    fam = stabilizer_pump(4)
    vs = [lieb_robinson_velocity(fam, mu) for mu in (0.1, 0.5, 1.0, 2.0)]
    assert all(a <= b for a, b in zip(vs, vs[1:]))


def test_boundary_decay_examples():
    assert boundary_decay_check(stabilizer_pump(3)).maximum == 0
    nu = DecayModel("exponential", 1.0).nu
    assert boundary_decay_from_norms({1: 0.3}, nu).maximum == pytest.approx(math.e * 0.3)
    norms = {d: 2.0 ** -d for d in range(1, 40)}
    rep = boundary_decay_from_norms(norms, lambda r: math.exp(r / 2))
    direct = max(math.exp(r / 2) * sum(2.0 ** -d for d in range(r, 40)) for r in range(1, 40))
    assert rep.maximum == pytest.approx(direct)
    assert rep.maximum < 2


def test_boundary_decay_glauber_bounded_in_size():
    vals = [boundary_decay_check(glauber_ising(n, boundary=1), mu=1.0).maximum for n in (4, 5, 6)]
    assert max(vals) == pytest.approx(min(vals))


def test_frustration_free_examples():
    rep = check_frustration_free(product_damping_chain(3), tol=1e-12)
    assert rep.passed and rep.max_residual <= 1e-12
    assert check_frustration_free(stabilizer_pump(4)).passed
    assert check_frustration_free(glauber_ising(4, beta=0.6, boundary=-1)).passed
    rep = check_frustration_free(frustrated_contrast(3))
    assert not rep.passed and rep.max_residual > 0.01
    # closed fixed points are fixed by the open evolution for frustration-free families
    assert max(check_frustration_free(stabilizer_pump(3)).open_residuals) <= 1e-10


def test_open_generator_trace_preserving(rng):
    for fam in (glauber_ising(3, beta=0.4, h=0.3), stabilizer_pump(3), frustrated_contrast(3)):
        g = assemble_open(fam)
        x = random_density_matrix(8, rng)
        assert abs(np.trace(S.apply(g, x))) <= 1e-10


def test_translation_invariant_marginals():
    fam = stabilizer_pump(5)
    rho, _ = S.fixed_point(assemble_closed(fam))
    marg = [partial_trace(rho, fam.lattice.region([k])) for k in range(1, 4)]
    assert all(np.abs(m - marg[0]).max() <= 1e-6 for m in marg)


def test_term_validation_and_cap():
    lat = Lattice.chain(2)
    with pytest.raises(DomainError):
        LocalTerm(lat.region([0]), (np.eye(4),))
    with pytest.raises(DomainError):
        LocalTerm(lat.region([0]))
    fam = product_damping_chain(3)
    fam.dim_cap = 16
    with pytest.raises(ResourceError):
        assemble_open(fam)


def test_fit_polynomial_envelope():
    a, b = fit_polynomial_envelope([1, 2, 4, 8], [3, 12, 48, 192])
    assert a == pytest.approx(3) and b == pytest.approx(2)
