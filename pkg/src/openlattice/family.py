"""Uniform families of local Lindbladians and their assembly on finite regions.

A family provides bulk terms ``M_Z`` (enumerated on a box) and, for every
region of the box, boundary terms ``B_d`` supported in the depth-``d``
boundary layer of that region. The open generator of a region sums the bulk
terms with support inside it; the closed generator also adds the region's
boundary terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, ResourceError
from .lattice import Lattice, Region, boundary_depth, boundary_layer
from .linalg import embed_sparse, trace_norm
from .superop import Superoperator, _sum_sparse, diamond_norm, fixed_point_basis, lindblad_generator, zero

DEFAULT_DIM_CAP = 4 ** 10

_STRENGTH_CACHE: dict[bytes, float] = {}


@dataclass
class DecayModel:
    """``nu(r) = exp(mu r)`` or ``(1 + r)^mu`` plus fitted quantities."""

    form: str = "exponential"
    mu: float = 1.0
    v: float | None = None
    polynomial_envelope: tuple[float, ...] = ()

    def __post_init__(self):
        if self.form not in ("exponential", "polynomial"):
            raise DomainError(f"unknown decay form {self.form!r}")
        if self.mu <= 0:
            raise DomainError("mu must be positive")

    def nu(self, r: float, mu: float | None = None) -> float:
        mu = self.mu if mu is None else mu
        if self.form == "exponential":
            return math.exp(mu * r)
        return (1.0 + r) ** mu


@dataclass(eq=False)
class LocalTerm:
    """A Lindblad generator acting on the sites of ``support``."""

    support: Region
    lindblad_ops: tuple = ()
    hamiltonian: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        d = self.support.dim
        self.lindblad_ops = tuple(np.asarray(l, dtype=complex) for l in self.lindblad_ops)
        if self.hamiltonian is not None:
            self.hamiltonian = np.asarray(self.hamiltonian, dtype=complex)
        ops = list(self.lindblad_ops) + ([] if self.hamiltonian is None else [self.hamiltonian])
        if not ops:
            raise DomainError("a term needs a Hamiltonian or a Lindblad operator")
        if any(o.shape != (d, d) for o in ops):
            raise DomainError(f"term operators must be {d}x{d} for support {self.support}")

    @property
    def depth(self) -> int:
        return 0

    @cached_property
    def generator(self) -> Superoperator:
        return lindblad_generator(self.hamiltonian, self.lindblad_ops, self.support)

    @property
    def strength(self) -> float:
        """Diamond norm of the local generator (cached by matrix content)."""
        key = self.generator.dense().tobytes()
        if key not in _STRENGTH_CACHE:
            _STRENGTH_CACHE[key] = diamond_norm(self.generator, tol=1e-8)
        return _STRENGTH_CACHE[key]

    def embedded(self, region: Region):
        """``(H, [L_j])`` as sparse matrices on the Hilbert space of ``region``."""
        if not self.support.issubset(region):
            raise DomainError(f"term support {self.support} not inside {region}")
        pos = self.support.positions_in(region)
        dims = [region.lattice.site_dim] * len(region)
        h = None if self.hamiltonian is None else embed_sparse(self.hamiltonian, pos, dims)
        return h, [embed_sparse(l, pos, dims) for l in self.lindblad_ops]

    def apply(self, rho: np.ndarray, region: Region) -> np.ndarray:
        """``M_Z(rho)`` for an operator ``rho`` on ``region``."""
        h, ops = self.embedded(region)
        rho = np.asarray(rho, dtype=complex)
        out = np.zeros_like(rho)
        if h is not None:
            out += 1j * (h.T @ rho.T).T - 1j * (h @ rho)
        for l in ops:
            lr = l @ rho
            out += (l.conj() @ lr.T).T  # L rho L^+
            k = l.conj().T @ l
            kr = k @ rho
            out -= 0.5 * (kr + (k.T @ rho.T).T)
        return out


@dataclass(eq=False)
class BoundaryTerm(LocalTerm):
    """A boundary-condition term of a region, supported in its depth-``d`` layer."""

    region: Region | None = None
    depth_: int = 1

    @property
    def depth(self) -> int:
        return self.depth_


@dataclass
class ModelSpec:
    name: str
    parameters: dict = field(default_factory=dict)
    rapid_mixing: bool = True
    frustration_free: bool = True
    pure_fixed_point: bool = True
    unique_fixed_point: bool = True

    def flags(self) -> dict:
        return {
            "rapid_mixing": self.rapid_mixing,
            "frustration_free": self.frustration_free,
            "pure_fixed_point": self.pure_fixed_point,
            "unique_fixed_point": self.unique_fixed_point,
        }


BulkRule = Callable[[Lattice], Sequence[LocalTerm]]
BoundaryRule = Callable[[Lattice, Region], Sequence[BoundaryTerm]]


@dataclass(eq=False)
class UniformFamily:
    """Bulk terms, a boundary rule and decay data for one model on one box.

    ``bulk_rule(lattice)`` enumerates every bulk term on the box;
    ``boundary_rule(lattice, region)`` returns the boundary terms of a region.
    """

    name: str
    lattice: Lattice
    bulk_rule: BulkRule
    boundary_rule: BoundaryRule | None = None
    decay: DecayModel = field(default_factory=DecayModel)
    translation_invariant: bool = True
    interaction_range: int = 1
    spec: ModelSpec | None = None
    dim_cap: int = DEFAULT_DIM_CAP
    graph: list | None = None

    @cached_property
    def _bulk(self) -> tuple[LocalTerm, ...]:
        terms = tuple(self.bulk_rule(self.lattice))
        for t in terms:
            if t.support.diameter() > self.interaction_range:
                raise DomainError(f"term {t.label} exceeds the interaction range")
        return terms

    def bulk_terms(self, region: Region | None = None) -> list[LocalTerm]:
        """Bulk terms whose support lies inside ``region`` (default: the box)."""
        if region is None:
            return list(self._bulk)
        return [t for t in self._bulk if t.support.issubset(region)]

    def boundary_terms(self, region: Region | None = None) -> list[BoundaryTerm]:
        region = self.lattice.full() if region is None else region
        if self.boundary_rule is None:
            return []
        terms = list(self.boundary_rule(self.lattice, region))
        for t in terms:
            _check_boundary_term(t, region)
        return terms

    def check_cap(self, region: Region) -> None:
        if region.dim ** 2 > self.dim_cap:
            raise ResourceError(
                f"operator-space dimension {region.dim ** 2} exceeds the cap {self.dim_cap}")


def _check_boundary_term(t: BoundaryTerm, region: Region) -> None:
    layer = boundary_layer(region.lattice, region, t.depth)
    if not t.support.issubset(layer):
        raise DomainError(f"boundary term {t.label} leaves the depth-{t.depth} layer")


def make_boundary_term(region: Region, support: Region, lindblad_ops=(), hamiltonian=None,
                       label: str = "") -> BoundaryTerm:
    """Boundary term whose depth is the smallest layer containing ``support``."""
    return BoundaryTerm(support, tuple(lindblad_ops), hamiltonian, label, region,
                        boundary_depth(region, support))


def assemble_terms(terms: Sequence[LocalTerm], region: Region) -> Superoperator:
    """Sum of the given terms embedded into the Hilbert space of ``region``."""
    d = region.dim
    if not terms:
        return zero(d, region)
    hs, ops = [], []
    for t in terms:
        h, ls = t.embedded(region)
        if h is not None:
            hs.append(h)
        ops.extend(ls)
    h = _sum_sparse(hs, d) if hs else None
    return lindblad_generator(h, ops, region)


def open_terms(family: UniformFamily, region: Region | None = None) -> list[LocalTerm]:
    return family.bulk_terms(region)


def closed_terms(family: UniformFamily, region: Region | None = None) -> list[LocalTerm]:
    return family.bulk_terms(region) + family.boundary_terms(region)


def restricted_terms(family: UniformFamily, b: Region, a: Region, max_depth: int) -> list[LocalTerm]:
    """Terms of the generator on ``B`` with ``A`` removed.

    Bulk terms with support in ``B \\ A`` plus the boundary terms of ``B`` of
    depth at most ``max_depth``; no kept term touches ``A``.
    """
    rest = b - a
    bulk = [t for t in family.bulk_terms(b) if t.support.issubset(rest)]
    bnd = [t for t in family.boundary_terms(b)
           if t.depth <= max_depth and t.support.issubset(rest)]
    return bulk + bnd


def _region(family: UniformFamily, region: Region | None) -> Region:
    region = family.lattice.full() if region is None else region
    if region.lattice != family.lattice:
        raise DomainError("region belongs to a different lattice")
    family.check_cap(region)
    return region


def assemble_open(family: UniformFamily, region: Region | None = None) -> Superoperator:
    region = _region(family, region)
    return assemble_terms(open_terms(family, region), region)


def assemble_closed(family: UniformFamily, region: Region | None = None) -> Superoperator:
    region = _region(family, region)
    return assemble_terms(closed_terms(family, region), region)


def assemble_restricted(family: UniformFamily, b: Region, a: Region, max_depth: int) -> Superoperator:
    b = _region(family, b)
    return assemble_terms(restricted_terms(family, b, a, max_depth), b)


def lieb_robinson_velocity(family: UniformFamily, mu: float | None = None) -> float:
    """``sup_x sum_{Z ni x} ||M_Z||_diamond |Z| nu(diam Z)`` over the box; stored in ``decay.v``."""
    mu = family.decay.mu if mu is None else mu
    per_site: dict = {}
    for t in family.bulk_terms():
        w = t.strength * len(t.support) * family.decay.nu(t.support.diameter(), mu)
        for x in t.support:
            per_site[x] = per_site.get(x, 0.0) + w
    v = max(per_site.values(), default=0.0)
    family.decay.v = v
    return v


@dataclass
class BoundaryDecayReport:
    norms_by_depth: dict[int, float]
    lhs: dict[int, float]
    maximum: float

    def to_dict(self) -> dict:
        return {"norms_by_depth": self.norms_by_depth, "lhs": self.lhs, "maximum": self.maximum}


def boundary_decay_from_norms(norms_by_depth: dict[int, float], nu: Callable[[float], float]
                              ) -> BoundaryDecayReport:
    depths = sorted(norms_by_depth)
    lhs = {}
    for r in range(1, (depths[-1] if depths else 0) + 1):
        lhs[r] = nu(r) * sum(w for d, w in norms_by_depth.items() if d >= r)
    return BoundaryDecayReport(dict(norms_by_depth), lhs, max(lhs.values(), default=0.0))


def boundary_decay_check(family: UniformFamily, mu: float | None = None,
                         region: Region | None = None) -> BoundaryDecayReport:
    """``nu(r) sum_{d >= r} ||B_d||_diamond`` for every ``r`` on one region.

    ``||B_d||`` is bounded by the sum of the diamond norms of the depth-``d``
    terms.
    """
    mu = family.decay.mu if mu is None else mu
    norms: dict[int, float] = {}
    for t in family.boundary_terms(region):
        norms[t.depth] = norms.get(t.depth, 0.0) + t.strength
    return boundary_decay_from_norms(norms, lambda r: family.decay.nu(r, mu))


def fit_polynomial_envelope(sizes: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``values ~ a * sizes^b`` on positive entries; returns ``(a, b)``."""
    x = np.asarray(sizes, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return (float(y.max()) if y.size else 0.0, 0.0)
    b, log_a = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(np.exp(log_a)), float(b)


@dataclass
class FrustrationReport:
    residuals: list[dict]
    open_residuals: list[float]
    max_residual: float
    passed: bool
    tol: float

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "passed": self.passed,
            "tol": self.tol,
            "open_residuals": self.open_residuals,
            "residuals": self.residuals,
        }


def check_frustration_free(family: UniformFamily, region: Region | None = None,
                           tol: float = 1e-10) -> FrustrationReport:
    """Residuals ``||M_Z(rho)||_1`` for every closed fixed point and bulk term.

    Also records ``||L_open(rho)||_1``: each closed fixed point should be fixed
    by the open evolution too.
    """
    region = _region(family, region)
    gen = assemble_closed(family, region)
    states = fixed_point_basis(gen)
    rows, open_res = [], []
    bulk = family.bulk_terms(region)
    for k, rho in enumerate(states):
        total = np.zeros_like(rho)
        for t in bulk:
            r = t.apply(rho, region)
            total += r
            rows.append({"fixed_point": k, "term": t.label, "support": [list(s) for s in t.support],
                         "residual": trace_norm(r)})
        open_res.append(trace_norm(total))
    worst = max([r["residual"] for r in rows] + open_res, default=0.0)
    return FrustrationReport(rows, open_res, worst, worst <= tol, tol)
