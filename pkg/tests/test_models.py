import math

import numpy as np
import pytest

from openlattice import superop as S
from openlattice.errors import DomainError
from openlattice.family import assemble_closed
from openlattice.lattice import Lattice
from openlattice.models import (BELL, MODELS, build_model, frustrated_contrast, gibbs_weights, glauber_ising,
                                graph_state, hamiltonian_only, product_damping_chain, stabilizer_pump)


def closed_fixed_point(fam):
    return S.fixed_point(assemble_closed(fam))


def test_model_flags():
    flags = {name: build_model(name, size=3).spec.flags() for name in MODELS}
    assert flags["glauber_ising"]["pure_fixed_point"] is False
    assert flags["hamiltonian_only"] == {"rapid_mixing": False, "frustration_free": False,
                                        "pure_fixed_point": False, "unique_fixed_point": False}
    assert flags["frustrated_contrast"]["frustration_free"] is False
    assert all(flags[n]["frustration_free"] for n in ("product_damping", "stabilizer_pump"))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_damping_fixed_point_is_all_zeros(n):
    rho, unique = closed_fixed_point(product_damping_chain(n))
    ref = np.zeros((2 ** n, 2 ** n))
    ref[0, 0] = 1
    assert unique and np.abs(rho - ref).max() <= 1e-10


def test_stabilizer_two_sites_is_cz_bell_pair():
    rho, unique = closed_fixed_point(stabilizer_pump(2))
    psi = np.array([1, 1, 1, -1]) / 2  # CZ |++>, local-unitarily a Bell pair
    assert unique and np.abs(rho - np.outer(psi, psi)).max() <= 1e-10
    assert np.trace(rho @ rho).real == pytest.approx(1)


def test_stabilizer_graph_state_by_hand():
    lat = Lattice.chain(3)
    psi = graph_state(lat)
    ref = np.array([1, 1, 1, -1, 1, 1, -1, 1]) / math.sqrt(8)
    assert np.allclose(psi, ref)
    rho, _ = closed_fixed_point(stabilizer_pump(3))
    assert abs(psi.conj() @ rho @ psi - 1) <= 1e-10


def test_stabilizer_on_square_box():
    fam = stabilizer_pump((2, 2))
    rho, unique = closed_fixed_point(fam)
    psi = graph_state(fam.lattice)
    assert unique and abs(psi.conj() @ rho @ psi - 1) <= 1e-10


def brute_gibbs(n, beta, h, pin):
    out = []
    for k in range(2 ** n):
        s = [1 - 2 * ((k >> (n - 1 - j)) & 1) for j in range(n)]
        e = -sum(s[j] * s[j + 1] for j in range(n - 1)) - h * sum(s)
        e -= pin * (s[0] + s[-1])
        out.append(math.exp(-beta * e))
    out = np.array(out)
    return out / out.sum()


@pytest.mark.parametrize("n,beta,h,boundary", [(2, 0.7, 0.0, "free"), (3, 0.5, 0.3, "free"),
                                               (4, 0.4, 0.0, 1), (4, 0.9, -0.2, -1)])
def test_glauber_gibbs(n, beta, h, boundary):
    fam = glauber_ising(n, beta=beta, h=h, boundary=boundary)
    rho, unique = closed_fixed_point(fam)
    pin = 0 if boundary == "free" else int(boundary)
    ref = brute_gibbs(n, beta, h, pin)
    assert unique
    assert np.abs(rho - np.diag(ref)).max() <= 1e-10
    assert np.allclose(gibbs_weights(fam.lattice, beta=beta, h=h, pin=pin), ref)


def test_glauber_two_sites_explicit():
    beta = 0.7
    w = np.array([math.exp(beta), math.exp(-beta), math.exp(-beta), math.exp(beta)])
    rho, _ = closed_fixed_point(glauber_ising(2, beta=beta))
    assert np.allclose(np.diag(rho).real, w / w.sum(), atol=1e-10)


def test_glauber_infinite_temperature():
    rho, _ = closed_fixed_point(glauber_ising(3, beta=0.0))
    assert np.abs(rho - np.eye(8) / 8).max() <= 1e-10


def test_frustrated_fixed_point_mixed_and_unique():
    rho, unique = closed_fixed_point(frustrated_contrast(3))
    assert unique and np.trace(rho @ rho).real < 1 - 1e-3
    assert np.linalg.norm(BELL) == pytest.approx(1)


def test_hamiltonian_only_is_not_unique():
    rho, unique = closed_fixed_point(hamiltonian_only(2))
    assert not unique
    spec = S.spectral_data(assemble_closed(hamiltonian_only(2)))
    # energies 2, 0, 0, -2: six vanishing Bohr frequencies
    assert spec.zero_multiplicity == 6 and not spec.peripheral_ok


def test_domain_errors():
    with pytest.raises(DomainError):
        product_damping_chain(3, rate=-1)
    with pytest.raises(DomainError):
        glauber_ising(3, beta=-0.1)
    with pytest.raises(DomainError):
        glauber_ising(3, boundary="periodic")
    with pytest.raises(DomainError):
        frustrated_contrast(2)
    with pytest.raises(DomainError):
        build_model("toric_code")
    with pytest.raises(DomainError):
        build_model("glauber_ising", temperature=1.0)
    with pytest.raises(DomainError):
        stabilizer_pump(4, edges=[(0, 2)])
