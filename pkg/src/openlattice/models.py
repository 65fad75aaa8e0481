"""Built-in uniform families.

Computational basis convention: ``|0>`` is spin up (``s = +1``), ``|1>`` is
spin down. Pauli matrices act in that basis.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

from .errors import DomainError
from .family import DecayModel, LocalTerm, ModelSpec, UniformFamily, make_boundary_term
from .lattice import Coord, Lattice, Region
from .linalg import kron

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|


def _box(size) -> Lattice:
    if isinstance(size, Lattice):
        return size
    if isinstance(size, (int, np.integer)):
        if size < 1:
            raise DomainError("need at least one site")
        return Lattice.chain(int(size))
    return Lattice.grid(tuple(int(n) for n in size))


def _product(ops_by_position: dict[int, np.ndarray], n: int) -> np.ndarray:
    return kron(*[ops_by_position.get(k, I2) for k in range(n)])


# ---------------------------------------------------------------------------
# non-interacting damping


def product_damping_chain(size=4, rate: float = 1.0) -> UniformFamily:
    """Independent amplitude damping ``sqrt(rate) |0><1|`` on every site."""
    if rate <= 0:
        raise DomainError("rate must be positive")
    lattice = _box(size)

    def bulk(lat: Lattice):
        return [LocalTerm(lat.region([x]), (math.sqrt(rate) * LOWER,), label=f"damp{x}")
                for x in lat.sites()]

    spec = ModelSpec("product_damping", {"size": _size_param(size), "rate": rate})
    return UniformFamily("product_damping", lattice, bulk, None, DecayModel("exponential", 1.0),
                         True, 0, spec)


# ---------------------------------------------------------------------------
# graph-state stabilizer pumping


def box_graph(lattice: Lattice) -> list[tuple[Coord, Coord]]:
    """Nearest-neighbour edges of the box."""
    edges = []
    for x in lattice.sites():
        for y in lattice.neighbors(x, inside=True):
            if x < y:
                edges.append((x, y))
    return edges


def _adjacency(lattice: Lattice, edges) -> dict[Coord, set[Coord]]:
    adj = {x: set() for x in lattice.sites()}
    for a, b in edges:
        a, b = lattice.coord(a), lattice.coord(b)
        if a == b or not lattice.contains(a) or not lattice.contains(b):
            raise DomainError(f"bad edge {(a, b)}")
        adj[a].add(b)
        adj[b].add(a)
    return adj


def _pump_term(vertex: Coord, nbrs, rate: float, lattice: Lattice):
    support = lattice.region([vertex, *nbrs])
    pos = {s: i for i, s in enumerate(support.sites)}
    n = len(support)
    stab = _product({pos[vertex]: X, **{pos[j]: Z for j in nbrs}}, n)
    zk = _product({pos[vertex]: Z}, n)
    op = math.sqrt(rate) * zk @ (np.eye(2 ** n) - stab) / 2
    return support, op


def graph_state(lattice: Lattice, edges=None, region: Region | None = None) -> np.ndarray:
    """``prod CZ |+...+>`` on ``region`` (the induced subgraph), as a ket."""
    region = lattice.full() if region is None else region
    edges = box_graph(lattice) if edges is None else edges
    adj = _adjacency(lattice, edges)
    n = len(region)
    idx = {s: i for i, s in enumerate(region.sites)}
    bits = np.array(list(itertools.product((0, 1), repeat=n)), dtype=int)
    phase = np.zeros(len(bits), dtype=int)
    for a in region:
        for b in adj[a]:
            if b in idx and a < b:
                phase += bits[:, idx[a]] * bits[:, idx[b]]
    return ((-1.0) ** phase / math.sqrt(2 ** n)).astype(complex)


def stabilizer_pump(size=3, rate: float = 1.0, edges=None) -> UniformFamily:
    """Pump into the graph state: ``sqrt(rate) Z_k (I - S_k)/2`` per vertex.

    ``S_k = X_k prod_{j ~ k} Z_j``. The graph defaults to the nearest-neighbour
    graph of the box; explicit edges must keep every closed neighbourhood
    within distance 2. For a sub-region, vertices with neighbours outside it
    get a boundary term pumping into the stabilizer of the induced subgraph.
    """
    if rate <= 0:
        raise DomainError("rate must be positive")
    lattice = _box(size)
    edge_list = box_graph(lattice) if edges is None else [tuple(map(lattice.coord, e)) for e in edges]
    adj = _adjacency(lattice, edge_list)
    for k, nb in adj.items():
        if any(lattice.dist(k, j) > 1 for j in nb):
            raise DomainError(f"edges at vertex {k} are not geometrically local")

    def bulk(lat: Lattice):
        terms = []
        for k in lat.sites():
            support, op = _pump_term(k, sorted(adj[k]), rate, lat)
            terms.append(LocalTerm(support, (op,), label=f"pump{k}"))
        return terms

    def boundary(lat: Lattice, region: Region):
        terms = []
        for k in region:
            inside = sorted(j for j in adj[k] if j in region)
            if len(inside) == len(adj[k]):
                continue
            support, op = _pump_term(k, inside, rate, lat)
            terms.append(make_boundary_term(region, support, (op,), label=f"edge-pump{k}"))
        return terms

    spec = ModelSpec("stabilizer_pump", {"size": _size_param(size), "rate": rate})
    return UniformFamily("stabilizer_pump", lattice, bulk, boundary, DecayModel("exponential", 1.0),
                         edges is None, 2, spec, graph=edge_list)


# ---------------------------------------------------------------------------
# heat-bath Glauber dynamics


def _heat_bath_ops(n_support: int, flip_pos: int, local_field: Callable[[np.ndarray], float],
                   beta: float, rate: float) -> list[np.ndarray]:
    """``sqrt(q) |x'><x|`` for every configuration ``x`` of the support.

    ``x'`` flips the spin at ``flip_pos``; ``q = rate / (1 + exp(beta dE))``
    with ``dE = 2 s_i field(x)``.
    """
    dim = 2 ** n_support
    ops = []
    for idx, bits in enumerate(itertools.product((0, 1), repeat=n_support)):
        spins = 1 - 2 * np.array(bits)
        de = 2 * spins[flip_pos] * local_field(spins)
        q = rate / (1.0 + math.exp(beta * de)) if beta * de < 700 else 0.0
        if q == 0.0:
            continue
        target = idx ^ (1 << (n_support - 1 - flip_pos))
        op = np.zeros((dim, dim), dtype=complex)
        op[target, idx] = math.sqrt(q)
        ops.append(op)
    return ops


def glauber_ising(size=4, beta: float = 0.5, h: float = 0.0, J: float = 1.0,
                  boundary: str | int = "free", rate: float = 1.0) -> UniformFamily:
    """Heat-bath Glauber dynamics for ``E = -J sum s_i s_j - h sum s_i``.

    The bulk term at ``i`` acts on ``i`` and its Z^D neighbours and is present
    whenever all of them lie in the region. Sites of a region with neighbours
    outside it get a boundary term that resamples the spin with those
    neighbours either absent (``boundary="free"``) or pinned to ``+1``/``-1``.
    """
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    if boundary not in ("free", 1, -1, "+1", "-1"):
        raise DomainError(f"unknown boundary {boundary!r}")
    pin = 0 if boundary == "free" else int(boundary)
    lattice = _box(size)

    def term_ops(lat: Lattice, i: Coord, inside: list[Coord], n_out: int):
        support = lat.region([i, *inside])
        pos = {s: k for k, s in enumerate(support.sites)}
        ip = pos[i]
        nb = [pos[j] for j in inside]

        def field(spins):
            return J * (sum(spins[k] for k in nb) + pin * n_out) + h

        return support, _heat_bath_ops(len(support), ip, field, beta, rate)

    def bulk(lat: Lattice):
        terms = []
        for i in lat.sites():
            nbrs = lat.neighbors(i)
            if all(lat.contains(j) for j in nbrs):
                support, ops = term_ops(lat, i, nbrs, 0)
                terms.append(LocalTerm(support, tuple(ops), label=f"glauber{i}"))
        return terms

    def bnd(lat: Lattice, region: Region):
        terms = []
        for i in region:
            nbrs = lat.neighbors(i)
            inside = [j for j in nbrs if lat.contains(j) and j in region]
            if len(inside) == len(nbrs):
                continue
            support, ops = term_ops(lat, i, inside, len(nbrs) - len(inside))
            terms.append(make_boundary_term(region, support, ops, label=f"edge-glauber{i}"))
        return terms

    spec = ModelSpec("glauber_ising",
                     {"size": _size_param(size), "beta": beta, "h": h, "J": J,
                      "boundary": boundary, "rate": rate},
                     rapid_mixing=True, frustration_free=True, pure_fixed_point=False,
                     unique_fixed_point=True)
    return UniformFamily("glauber_ising", lattice, bulk, bnd, DecayModel("exponential", 1.0),
                         True, 2, spec)


def ising_energy(spins: np.ndarray, lattice: Lattice, region: Region, J: float = 1.0, h: float = 0.0,
                 pin: int = 0) -> float:
    """Energy of a spin configuration on ``region`` including pinned outside neighbours."""
    idx = {s: k for k, s in enumerate(region.sites)}
    e = 0.0
    for a in region:
        for b in lattice.neighbors(a):
            if b in idx:
                if a < b:
                    e -= J * spins[idx[a]] * spins[idx[b]]
            elif pin:
                e -= J * spins[idx[a]] * pin
        e -= h * spins[idx[a]]
    return e


def gibbs_weights(lattice: Lattice, region: Region | None = None, beta: float = 0.5, J: float = 1.0,
                  h: float = 0.0, pin: int = 0) -> np.ndarray:
    """Normalised Boltzmann weights over computational basis states of ``region``."""
    region = lattice.full() if region is None else region
    n = len(region)
    e = np.array([ising_energy(1 - 2 * np.array(b), lattice, region, J, h, pin)
                  for b in itertools.product((0, 1), repeat=n)])
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


# ---------------------------------------------------------------------------
# controls


BELL = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def frustrated_contrast(size=3, rate: float = 1.0) -> UniformFamily:
    """Overlapping pair pumps toward ``|Phi+>`` on every nearest-neighbour pair.

    Neighbouring pumps demand incompatible pure pair states, so no state is
    annihilated by every term.
    """
    lattice = _box(size)
    if lattice.num_sites < 3:
        raise DomainError("frustrated_contrast needs at least 3 sites")
    others = [np.array(v, dtype=complex) / math.sqrt(2) for v in
              ([1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0])]
    ops = tuple(math.sqrt(rate) * np.outer(BELL, b.conj()) for b in others)

    def bulk(lat: Lattice):
        return [LocalTerm(lat.region([a, b]), ops, label=f"pair{a}-{b}") for a, b in box_graph(lat)]

    spec = ModelSpec("frustrated_contrast", {"size": _size_param(size), "rate": rate},
                     rapid_mixing=True, frustration_free=False, pure_fixed_point=False,
                     unique_fixed_point=True)
    return UniformFamily("frustrated_contrast", lattice, bulk, None, DecayModel("exponential", 1.0),
                         True, 1, spec)


def hamiltonian_only(size=2, field: float = 1.0) -> UniformFamily:
    """``H = field * sum_i Z_i`` with no dissipation: oscillates forever."""
    lattice = _box(size)

    def bulk(lat: Lattice):
        return [LocalTerm(lat.region([x]), (), field * Z, label=f"field{x}") for x in lat.sites()]

    spec = ModelSpec("hamiltonian_only", {"size": _size_param(size), "field": field},
                     rapid_mixing=False, frustration_free=False, pure_fixed_point=False,
                     unique_fixed_point=False)
    return UniformFamily("hamiltonian_only", lattice, bulk, None, DecayModel("exponential", 1.0),
                         True, 0, spec)


def _size_param(size):
    if isinstance(size, Lattice):
        return list(size.shape)
    if isinstance(size, (int, np.integer)):
        return int(size)
    return [int(n) for n in size]


MODELS: dict[str, Callable[..., UniformFamily]] = {
    "product_damping": product_damping_chain,
    "stabilizer_pump": stabilizer_pump,
    "glauber_ising": glauber_ising,
    "frustrated_contrast": frustrated_contrast,
    "hamiltonian_only": hamiltonian_only,
}


def build_model(name: str, **params) -> UniformFamily:
    try:
        factory = MODELS[name]
    except KeyError:
        raise DomainError(f"unknown model {name!r}; known: {sorted(MODELS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name}: {exc}") from None
