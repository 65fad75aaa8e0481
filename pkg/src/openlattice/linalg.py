"""Dense operator algebra on tensor-product spaces.

Operators are plain complex ``numpy`` arrays. Tensor factors follow the
canonical (lexicographic) site order of the region an operator lives on.
"""
from __future__ import annotations

import json
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, NumericalError
from .lattice import Region

STATE_TOL = 1e-10


def _check_square(op: np.ndarray) -> np.ndarray:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {op.shape}")
    return op


def dagger(op: np.ndarray) -> np.ndarray:
    return np.conj(op).T


def is_hermitian(op: np.ndarray, tol: float = 1e-12) -> bool:
    op = _check_square(op)
    return bool(np.max(np.abs(op - dagger(op)), initial=0.0) <= tol)


def kron(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def factor_permutation(dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Index map for reordering tensor factors.

    Entry ``k`` gives the canonical basis index of the basis state whose
    multi-index, written in the factor order ``order``, has flat index ``k``.
    """
    dims = tuple(dims)
    idx = np.arange(int(np.prod(dims))).reshape(dims)
    return np.transpose(idx, order).reshape(-1)


def tensor_regions(parts: Sequence[tuple[Region, np.ndarray]], target: Region) -> np.ndarray:
    """Tensor product of operators on disjoint regions, with factors in ``target``'s site order."""
    sites = [x for region, _ in parts for x in region.sites]
    if sorted(sites) != sorted(target.sites) or len(set(sites)) != len(sites):
        raise DomainError("parts must partition the target region")
    out = kron(*[op for _, op in parts])
    pos = {x: k for k, x in enumerate(target.sites)}
    order = [pos[x] for x in sites]
    dims = [target.lattice.site_dim] * len(sites)
    # canonical index of every basis state of the concatenated layout
    perm = factor_permutation(dims, order)
    res = np.empty_like(out)
    res[np.ix_(perm, perm)] = out
    return res


def embed_positions(local: np.ndarray, positions: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """``local`` acting on factors ``positions`` of a space with factor dims ``dims``."""
    local = _check_square(local)
    positions = tuple(positions)
    dims = tuple(dims)
    if len(set(positions)) != len(positions) or any(p < 0 or p >= len(dims) for p in positions):
        raise DomainError(f"bad factor positions {positions}")
    d_loc = int(np.prod([dims[p] for p in positions]))
    if local.shape[0] != d_loc:
        raise DomainError(f"local operator has dim {local.shape[0]}, support needs {d_loc}")
    rest = [i for i in range(len(dims)) if i not in positions]
    d_rest = int(np.prod([dims[i] for i in rest]))
    n = len(dims)
    full = np.kron(local, np.eye(d_rest))
    order = list(positions) + rest
    t = full.reshape([dims[i] for i in order] * 2)
    inv = np.argsort(order)
    t = np.transpose(t, list(inv) + [n + i for i in inv])
    D = int(np.prod(dims))
    return t.reshape(D, D)


def embed_sparse(local, positions: Sequence[int], dims: Sequence[int]) -> sp.csr_matrix:
    """Sparse version of :func:`embed_positions`."""
    positions = tuple(positions)
    dims = tuple(dims)
    rest = [i for i in range(len(dims)) if i not in positions]
    d_rest = int(np.prod([dims[i] for i in rest]))
    full = sp.kron(sp.csr_matrix(local), sp.identity(d_rest, format="csr"), format="coo")
    if positions == tuple(range(len(positions))):
        return full.tocsr()
    order = list(positions) + rest
    perm = factor_permutation([dims[i] for i in order], np.argsort(order))
    # perm maps canonical flat index -> flat index in `order` layout; invert it
    to_canon = np.empty_like(perm)
    to_canon[perm] = np.arange(perm.size)
    D = int(np.prod(dims))
    return sp.csr_matrix((full.data, (to_canon[full.row], to_canon[full.col])), shape=(D, D))


def embed(local: np.ndarray, support: Region, region: Region | None = None) -> np.ndarray:
    """Tensor ``local`` (on ``support``) with the identity on the rest of ``region``.

    ``region`` defaults to the whole lattice.
    """
    if region is None:
        region = support.lattice.full()
    if not support.issubset(region):
        raise DomainError("support not contained in the target region")
    dims = [region.lattice.site_dim] * len(region)
    return embed_positions(local, support.positions_in(region), dims)


def partial_trace_positions(op: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``; kept factors stay in ascending order."""
    op = _check_square(op)
    dims = tuple(dims)
    keep = sorted(set(keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise DomainError(f"keep={keep} out of range for {n} factors")
    if op.shape[0] != int(np.prod(dims)):
        raise DomainError("operator dimension does not match factor dims")
    drop = [i for i in range(n) if i not in keep]
    t = op.reshape(dims + dims)
    # move kept row factors, dropped row factors, kept col factors, dropped col factors
    t = np.transpose(t, keep + drop + [n + i for i in keep] + [n + i for i in drop])
    dk = int(np.prod([dims[i] for i in keep]))
    dd = int(np.prod([dims[i] for i in drop]))
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def partial_trace(op: np.ndarray, keep: Region, support: Region | None = None) -> np.ndarray:
    """Reduce ``op`` (living on ``support``, default the whole lattice) onto ``keep``."""
    if support is None:
        support = keep.lattice.full()
    if not keep.issubset(support):
        raise DomainError("kept region is not a subset of the operator support")
    dims = [support.lattice.site_dim] * len(support)
    return partial_trace_positions(op, dims, keep.positions_in(support))


def trace_norm(op) -> float:
    op = np.asarray(op)
    if op.size == 0:
        return 0.0
    if is_hermitian(op, 1e-13):
        return float(np.sum(np.abs(np.linalg.eigvalsh((op + dagger(op)) / 2))))
    return float(np.sum(np.linalg.svd(op, compute_uv=False)))


def operator_norm(op) -> float:
    op = np.asarray(op)
    if op.size == 0:
        return 0.0
    return float(np.linalg.svd(op, compute_uv=False)[0])


def hermitian_part(op: np.ndarray) -> np.ndarray:
    return (op + dagger(op)) / 2


def validate_state(rho: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    """Return the Hermitian part of ``rho`` after checking it is a density matrix.

    Eigenvalues in ``[-tol, 0)`` are treated as roundoff, clipped to zero and
    the trace renormalised; anything more negative raises.
    """
    rho = _check_square(rho)
    herm_err = np.max(np.abs(rho - dagger(rho)), initial=0.0)
    if herm_err > 1e-8:
        raise NumericalError("operator is not Hermitian", hermiticity_error=float(herm_err))
    rho = hermitian_part(rho)
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1) > max(tol, 1e-8):
        raise NumericalError("state does not have unit trace", trace=tr)
    w, v = np.linalg.eigh(rho)
    if w[0] < -tol:
        raise NumericalError("state has a negative eigenvalue", min_eigenvalue=float(w[0]))
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        rho = (v * w) @ dagger(v)
        rho = hermitian_part(rho)
    return rho / np.real(np.trace(rho))


def is_state(rho: np.ndarray, tol: float = STATE_TOL) -> bool:
    try:
        rho = _check_square(rho)
    except DomainError:
        return False
    if not is_hermitian(rho, 1e-10):
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh(hermitian_part(rho))[0] >= -tol)


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.vdot(rho, rho)))


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return psi / np.linalg.norm(psi)


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state from the induced (Ginibre) measure."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho)


def operator_to_json(op: np.ndarray) -> str:
    op = _check_square(op)
    flat = op.reshape(-1)
    return json.dumps({
        "dim": int(op.shape[0]),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    })


def operator_from_json(text: str) -> np.ndarray:
    data = json.loads(text)
    d = int(data["dim"])
    vals = np.array([complex(re, im) for re, im in data["entries"]], dtype=complex)
    if vals.size != d * d:
        raise DomainError("entry count does not match dim")
    return vals.reshape(d, d)


def save_operator(path, op: np.ndarray) -> None:
    """Portable binary form: a ``.npy`` file of complex128 entries (row-major)."""
    np.save(path, np.ascontiguousarray(_check_square(op), dtype=np.complex128))


def load_operator(path) -> np.ndarray:
    return _check_square(np.load(path))
