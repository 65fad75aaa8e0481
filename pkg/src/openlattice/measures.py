"""Entropies, correlation measures and continuity bounds (all entropies in bits)."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, NumericalError
from .lattice import Region
from .linalg import dagger, hermitian_part, partial_trace_positions, random_unitary, trace_norm, validate_state

EIG_FLOOR = 1e-14


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * math.log2(x) - (1 - x) * math.log2(1 - x))


def entropy(rho: np.ndarray, validate: bool = True) -> float:
    """Von Neumann entropy ``-tr rho log2 rho``."""
    rho = validate_state(rho) if validate else hermitian_part(np.asarray(rho))
    w = np.linalg.eigvalsh(rho)
    w = w[w > EIG_FLOOR]
    return float(max(-np.sum(w * np.log2(w)), 0.0)) + 0.0  # no negative zero


@dataclass(frozen=True)
class Bipartition:
    """Two disjoint groups of tensor factors of a state with factor dims ``dims``."""

    dims: tuple[int, ...]
    a: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "a", tuple(sorted(int(k) for k in self.a)))
        object.__setattr__(self, "b", tuple(sorted(int(k) for k in self.b)))
        n = len(self.dims)
        if not self.a or not self.b:
            raise DomainError("both parts of a bipartition must be nonempty")
        if set(self.a) & set(self.b):
            raise DomainError("bipartition parts overlap")
        if any(k < 0 or k >= n for k in self.a + self.b):
            raise DomainError("bipartition factor index out of range")

    @classmethod
    def of(cls, support: Region, a: Region, b: Region | None = None) -> "Bipartition":
        """Split a state on ``support`` into ``a`` and ``b`` (default: the rest of ``support``)."""
        b = support - a if b is None else b
        if not a.isdisjoint(b):
            raise DomainError("regions overlap")
        dims = [support.lattice.site_dim] * len(support)
        return cls(tuple(dims), a.positions_in(support), b.positions_in(support))

    @classmethod
    def split(cls, d_a: int, d_b: int) -> "Bipartition":
        """A plain ``C^{d_a} (x) C^{d_b}`` split."""
        return cls((d_a, d_b), (0,), (1,))

    @property
    def d_a(self) -> int:
        return int(np.prod([self.dims[k] for k in self.a]))

    @property
    def d_b(self) -> int:
        return int(np.prod([self.dims[k] for k in self.b]))


def _check(rho: np.ndarray, split: Bipartition) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (int(np.prod(split.dims)),) * 2:
        raise DomainError("state dimension does not match the bipartition")
    return rho


def reduced_ab(rho: np.ndarray, split: Bipartition):
    """``(rho_AB, rho_A, rho_B)`` with the A factors first in ``rho_AB``."""
    rho = _check(rho, split)
    keep = sorted(split.a + split.b)
    rab = partial_trace_positions(rho, split.dims, keep)
    sub_dims = [split.dims[k] for k in keep]
    pos_a = [keep.index(k) for k in split.a]
    pos_b = [keep.index(k) for k in split.b]
    order = pos_a + pos_b
    n = len(keep)
    t = rab.reshape(sub_dims * 2).transpose(order + [n + k for k in order])
    d = rab.shape[0]
    rab = t.reshape(d, d)
    da = split.d_a
    t4 = rab.reshape(da, d // da, da, d // da)
    ra = np.einsum("ajbj->ab", t4)
    rb = np.einsum("iaib->ab", t4)
    return rab, ra, rb


def mutual_information(rho: np.ndarray, split: Bipartition) -> float:
    rab, ra, rb = reduced_ab(validate_state(rho), split)
    value = entropy(ra, False) + entropy(rb, False) - entropy(rab, False)
    if value < -1e-9:
        raise NumericalError("negative mutual information", value=value)
    return max(value, 0.0) + 0.0


def correlation_operator(rho: np.ndarray, split: Bipartition) -> np.ndarray:
    """``rho_AB - rho_A (x) rho_B`` (A factors first)."""
    rab, ra, rb = reduced_ab(rho, split)
    return rab - np.kron(ra, rb)


def trace_distance_correlation(rho: np.ndarray, split: Bipartition) -> float:
    return trace_norm(correlation_operator(rho, split))


def _polar(x: np.ndarray) -> np.ndarray:
    """Contraction ``W`` with ``tr(W X) = ||X||_1``."""
    u, _, vh = np.linalg.svd(x)
    return dagger(vh) @ dagger(u)


def _pauli_basis(n_qubits: int) -> np.ndarray:
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    out = []
    for combo in itertools.product(paulis, repeat=n_qubits):
        m = np.ones((1, 1))
        for p in combo:
            m = np.kron(m, p)
        out.append(m)
    return np.array(out, dtype=complex)


def _qubits(d: int) -> int | None:
    n = int(round(math.log2(d))) if d > 0 else 0
    return n if 2 ** n == d and n <= 5 else None


def covariance_correlation(rho: np.ndarray, split: Bipartition, restarts: int = 8, seed: int = 0,
                           max_iter: int = 500, tol: float = 1e-13) -> float:
    """Lower-bound estimate of ``max |tr[(M (x) N) Delta]|`` over contractions ``M``, ``N``.

    For fixed ``N`` the best ``M`` is the polar contraction of
    ``tr_B[(I (x) N) Delta]`` and symmetrically for ``N``; the objective never
    decreases along the alternation. Starts: the Pauli products with the
    largest overlaps, then random unitaries.
    """
    delta = correlation_operator(validate_state(rho), split)
    da, db = split.d_a, split.d_b
    t4 = delta.reshape(da, db, da, db)
    if trace_norm(delta) == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    starts = []
    na, nb = _qubits(da), _qubits(db)
    if na is not None and nb is not None and na + nb <= 6:
        pa, pb = _pauli_basis(na), _pauli_basis(nb)
        # coefficient tr[(P (x) Q) Delta] = sum P_ji Q_lk Delta_(ik),(jl)
        coeff = np.einsum("pji,qlk,ikjl->pq", pa, pb, t4)
        order = np.argsort(-np.abs(coeff), axis=None)
        for flat in order[: max(restarts // 2, 1)]:
            starts.append(pb[np.unravel_index(flat, coeff.shape)[1]])
    while len(starts) < max(restarts, 1):
        starts.append(random_unitary(db, rng))
    best = 0.0
    for n_op in starts:
        value = 0.0
        for _ in range(max_iter):
            xa = np.einsum("ikjl,lk->ij", t4, n_op)  # tr_B[(I (x) N) Delta]
            m_op = _polar(xa)
            yb = np.einsum("ikjl,ji->kl", t4, m_op)  # tr_A[(M (x) I) Delta]
            n_op = _polar(yb)
            new = trace_norm(yb)
            if new - value <= tol:
                value = max(value, new)
                break
            value = new
        best = max(best, value)
    return float(best)


def fannes_audenaert_bound(delta: float, d: int) -> float:
    """``2 delta log2(d - 1) + 2 h_b(delta)`` for ``delta = ||rho - sigma||_1 < 1``."""
    if not 0.0 <= delta < 1.0:
        raise DomainError("the entropy continuity bound needs 0 <= delta < 1")
    if d < 2:
        raise DomainError("dimension must be at least 2")
    return 2 * delta * math.log2(d - 1) + 2 * binary_entropy(delta)


def mutual_info_continuity_bound(delta: float, d_a: int) -> float:
    """``6 delta log2(d_A) + 4 h_b(delta)`` for ``delta = ||rho_AB - sigma_AB||_1 < 1``."""
    if not 0.0 <= delta < 1.0:
        raise DomainError("the mutual-information continuity bound needs 0 <= delta < 1")
    if d_a < 1:
        raise DomainError("dimension must be positive")
    return 6 * delta * math.log2(d_a) + 4 * binary_entropy(delta)


@dataclass
class CorrelationReport:
    C: float
    T: float
    I: float
    d_A: int
    pinsker_ok: bool
    fannes_mutual_ok: bool
    C_is_lower_bound: bool = True

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    CSV_FIELDS = ("C", "T", "I", "d_A", "pinsker_ok", "fannes_mutual_ok")

    def csv_row(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"{self.C:.12g}", f"{self.T:.12g}", f"{self.I:.12g}", self.d_A,
                    int(self.pinsker_ok), int(self.fannes_mutual_ok)])
        return buf.getvalue()


def pinsker_chain_check(rho: np.ndarray, split: Bipartition, restarts: int = 8, seed: int = 0,
                        slack: float = 1e-9) -> CorrelationReport:
    """Evaluate ``C <= T <= 2 sqrt(I)`` and ``I <= 6 T log2 d_A + 4 h_b(T)`` (when ``T < 1``)."""
    c = covariance_correlation(rho, split, restarts, seed)
    t = trace_distance_correlation(rho, split)
    i = mutual_information(rho, split)
    pinsker = c <= t + slack and t <= 2 * math.sqrt(i) + slack
    fannes = True
    if t < 1:
        fannes = i <= mutual_info_continuity_bound(t, split.d_a) + slack
    return CorrelationReport(c, t, i, split.d_a, bool(pinsker), bool(fannes))


def product_marginal_pair(rho: np.ndarray, split: Bipartition):
    """``(rho_AB, rho_A (x) rho_B)``: the pair used by the mutual-information bound."""
    rab, ra, rb = reduced_ab(rho, split)
    return rab, np.kron(ra, rb)
