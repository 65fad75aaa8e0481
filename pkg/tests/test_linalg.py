import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openlattice.errors import DomainError, NumericalError
from openlattice.lattice import Lattice
from openlattice.linalg import (embed, embed_positions, embed_sparse, load_operator, operator_from_json,
                                operator_norm, operator_to_json, partial_trace, partial_trace_positions,
                                random_density_matrix, random_unitary, save_operator, tensor_regions,
                                trace_norm, validate_state)

Z = np.diag([1.0, -1.0])
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)
PHI = np.array([1, 0, 0, 1]) / np.sqrt(2)


def test_embed_z_on_first_site():
    chain = Lattice.chain(2)
    out = embed(Z, chain.region([0]))
    assert np.allclose(out, np.diag([1, 1, -1, -1]))


def test_embed_identity():
    chain = Lattice.chain(3)
    assert np.allclose(embed(np.eye(4), chain.region([0, 2])), np.eye(8))


def test_embed_index_oracle():
    chain = Lattice.chain(2)
    out = embed(LOWER, chain.region([1]))
    expected = np.zeros((4, 4), complex)
    # |a b> with b the second factor: entry <a 0| X |a 1> = 1
    for a in range(2):
        expected[2 * a + 0, 2 * a + 1] = 1
    assert np.allclose(out, expected)


def test_embed_dimension_mismatch():
    chain = Lattice.chain(2)
    with pytest.raises(DomainError):
        embed(np.eye(4), chain.region([0]))


def test_embed_sparse_matches_dense(rng):
    dims = [2, 2, 2, 2]
    op = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    for pos in [(0, 1), (2, 0), (3, 1), (1, 3)]:
        assert np.allclose(embed_sparse(op, pos, dims).toarray(), embed_positions(op, pos, dims))


def test_partial_trace_bell():
    rho = np.outer(PHI, PHI)
    chain = Lattice.chain(2)
    assert np.allclose(partial_trace(rho, chain.region([0])), np.eye(2) / 2)


def test_partial_trace_product(rng):
    x = random_density_matrix(2, rng)
    y = random_density_matrix(4, rng)
    assert np.allclose(partial_trace_positions(np.kron(3 * x, y), [2, 4], [1]), 3 * y)


def test_partial_trace_index_oracle(rng):
    rho = random_density_matrix(8, rng)
    expected = np.zeros((4, 4), complex)
    for a in range(2):
        for c in range(2):
            for a2 in range(2):
                for c2 in range(2):
                    expected[2 * a + c, 2 * a2 + c2] = sum(
                        rho[4 * a + 2 * b + c, 4 * a2 + 2 * b + c2] for b in range(2))
    assert np.allclose(partial_trace_positions(rho, [2, 2, 2], [0, 2]), expected)


def test_partial_trace_not_subset():
    chain = Lattice.chain(3)
    with pytest.raises(DomainError):
        partial_trace(np.eye(4), chain.region([2]), chain.region([0, 1]))


def test_trace_norm_examples(rng):
    assert trace_norm(random_density_matrix(4, rng)) == pytest.approx(1)
    assert trace_norm(np.outer(PHI, PHI) - np.eye(4) / 4) == pytest.approx(1.5)
    assert trace_norm(np.zeros((3, 3))) == 0


def test_operator_norm_examples(rng):
    assert operator_norm(random_unitary(5, rng)) == pytest.approx(1)
    assert operator_norm(np.diag([3, -5])) == pytest.approx(5)
    h = rng.standard_normal((6, 6))
    h = h + h.T
    v = rng.standard_normal(6)
    for _ in range(2000):
        v = h @ v
        v /= np.linalg.norm(v)
    assert operator_norm(h) == pytest.approx(abs(v @ h @ v), rel=1e-8)


def test_validate_state():
    assert np.allclose(validate_state(np.diag([1 + 1e-12, -1e-12])), np.diag([1, 0]))
    with pytest.raises(NumericalError):
        validate_state(np.diag([1.1, -0.1]))
    with pytest.raises(NumericalError):
        validate_state(np.diag([0.5, 0.4]))


def test_tensor_regions_marginals(rng):
    lat = Lattice.chain(5)
    a, b = lat.region([1, 2, 3]), lat.region([0, 4])
    ra, rb = random_density_matrix(8, rng), random_density_matrix(4, rng)
    out = tensor_regions([(a, ra), (b, rb)], lat.full())
    assert np.allclose(partial_trace(out, a), ra)
    assert np.allclose(partial_trace(out, b), rb)


def test_serialisation_roundtrip(tmp_path, rng):
    op = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.array_equal(operator_from_json(operator_to_json(op)), op)
    save_operator(tmp_path / "op.npy", op)
    assert np.array_equal(load_operator(tmp_path / "op.npy"), op)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_holder_and_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    delta = random_density_matrix(4, rng) - random_density_matrix(4, rng)
    f = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert abs(np.trace(f @ delta)) <= operator_norm(f) * trace_norm(delta) + 1e-12
    u, v = random_unitary(4, rng), random_unitary(4, rng)
    assert abs(trace_norm(u @ delta @ v) - trace_norm(delta)) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_partial_trace_of_embedding(seed):
    rng = np.random.default_rng(seed)
    chain = Lattice.chain(3)
    local = rng.standard_normal((2, 2))
    full = embed(local, chain.region([1]))
    assert np.allclose(partial_trace(full, chain.region([1])), 4 * local)
