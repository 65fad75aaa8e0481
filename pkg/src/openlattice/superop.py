"""Superoperators on column-stacked operators.

Convention: ``vec(X)`` stacks the columns of ``X``, so ``vec(A X B) =
(B^T kron A) vec(X)``. For a generator

    L(rho) = i[rho, H] + sum_j L_j rho L_j^+ - 1/2 {L_j^+ L_j, rho}

the matrix is

    -i (I kron H) + i (H^T kron I)
    + sum_j conj(L_j) kron L_j - 1/2 I kron L_j^+L_j - 1/2 (L_j^+L_j)^T kron I.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, NumericalError, ResourceError
from .krylov import expm_krylov
from .lattice import Region
from .linalg import dagger, is_hermitian, trace_norm, validate_state

KINDS = ("lindblad-generator", "channel", "projector", "generic")

# operator-space dimensions (d^2) below which dense algorithms are used
DENSE_EVOLVE_MAX = 256
DENSE_EIG_MAX = 1024
DENSE_NULL_MAX = 256
LU_BLOCK_MAX = 1024  # largest pattern block routed to sparse LU
PROJECTOR_MAX = 4096


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    return v.reshape(d, d, order="F")


@dataclass(frozen=True, eq=False)
class Superoperator:
    """A linear map on ``d x d`` operators stored as a sparse ``d^2 x d^2`` matrix."""

    matrix: sp.csr_matrix
    hilbert_dim: int
    support: Region | None = None
    kind: str = "generic"
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        if m.shape != (self.hilbert_dim ** 2, self.hilbert_dim ** 2):
            raise DomainError(f"matrix shape {m.shape} does not match hilbert_dim {self.hilbert_dim}")
        if self.kind not in KINDS:
            raise DomainError(f"unknown superoperator kind {self.kind!r}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.hilbert_dim ** 2

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply(self, x)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def adjoint(self) -> "Superoperator":
        """Hilbert-Schmidt adjoint (the Heisenberg-picture map)."""
        return Superoperator(self.matrix.conj().T.tocsr(), self.hilbert_dim, self.support, "generic")

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return add(self, other)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return add(self, scale(other, -1.0))

    def __neg__(self) -> "Superoperator":
        return scale(self, -1.0)

    def __mul__(self, c) -> "Superoperator":
        return scale(self, c)

    __rmul__ = __mul__

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return compose(self, other)

    def to_json(self) -> str:
        coo = self.matrix.tocoo()
        return json.dumps({
            "hilbert_dim": self.hilbert_dim,
            "kind": self.kind,
            "row": coo.row.tolist(),
            "col": coo.col.tolist(),
            "re": coo.data.real.tolist(),
            "im": coo.data.imag.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Superoperator":
        data = json.loads(text)
        d = int(data["hilbert_dim"])
        vals = np.asarray(data["re"]) + 1j * np.asarray(data["im"])
        m = sp.coo_matrix((vals, (data["row"], data["col"])), shape=(d * d, d * d))
        return cls(m.tocsr(), d, None, data.get("kind", "generic"))


def identity(d: int, support: Region | None = None) -> Superoperator:
    return Superoperator(sp.identity(d * d, dtype=complex, format="csr"), d, support, "channel")


def zero(d: int, support: Region | None = None) -> Superoperator:
    return Superoperator(sp.csr_matrix((d * d, d * d), dtype=complex), d, support, "lindblad-generator")


def _same_dim(a: Superoperator, b: Superoperator):
    if a.hilbert_dim != b.hilbert_dim:
        raise DomainError(f"dimension mismatch: {a.hilbert_dim} vs {b.hilbert_dim}")


def _joint_support(a: Superoperator, b: Superoperator):
    if a.support is None or b.support is None:
        return a.support if b.support is None else b.support
    return a.support | b.support


def add(a: Superoperator, b: Superoperator) -> Superoperator:
    _same_dim(a, b)
    if a.kind == b.kind == "lindblad-generator":
        kind = "lindblad-generator"
    else:
        kind = "generic"
    return Superoperator(a.matrix + b.matrix, a.hilbert_dim, _joint_support(a, b), kind)


def scale(a: Superoperator, c) -> Superoperator:
    c = complex(c)
    kind = "generic"
    if a.kind == "lindblad-generator" and c.imag == 0 and c.real >= 0:
        kind = "lindblad-generator"
    elif a.kind in ("channel", "projector") and c == 1:
        kind = a.kind
    return Superoperator(a.matrix * c, a.hilbert_dim, a.support, kind)


def compose(a: Superoperator, b: Superoperator) -> Superoperator:
    """``a o b``: apply ``b`` first."""
    _same_dim(a, b)
    kind = "channel" if a.kind == b.kind == "channel" else "generic"
    return Superoperator(a.matrix @ b.matrix, a.hilbert_dim, _joint_support(a, b), kind)


def apply(s: Superoperator, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (s.hilbert_dim, s.hilbert_dim):
        raise DomainError(f"operator shape {x.shape} does not match superoperator dim {s.hilbert_dim}")
    return unvec(s.matrix @ vec(x), s.hilbert_dim)


def from_kraus(kraus: Sequence[np.ndarray], support: Region | None = None) -> Superoperator:
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    d = kraus[0].shape[0]
    m = sum(np.kron(k.conj(), k) for k in kraus)
    ks = sum(dagger(k) @ k for k in kraus)
    kind = "channel" if np.allclose(ks, np.eye(d), atol=1e-12) else "generic"
    return Superoperator(sp.csr_matrix(m), d, support, kind)


def from_map(fn, d: int, support: Region | None = None, kind: str = "generic") -> Superoperator:
    """Build the matrix of an arbitrary linear map ``fn`` on ``d x d`` operators."""
    cols = []
    for k in range(d * d):
        e = np.zeros(d * d, dtype=complex)
        e[k] = 1
        cols.append(vec(fn(unvec(e, d))))
    return Superoperator(sp.csr_matrix(np.array(cols).T), d, support, kind)


def choi_matrix(s: Superoperator) -> np.ndarray:
    """``sum_ij |i><j| kron S(|i><j|)``."""
    d = s.hilbert_dim
    t = s.dense().reshape(d, d, d, d)  # [b, a, j, i] for S(|i><j|)[a, b]
    return np.transpose(t, (3, 1, 2, 0)).reshape(d * d, d * d)


def is_channel(s: Superoperator, tol: float = 1e-9) -> bool:
    d = s.hilbert_dim
    j = choi_matrix(s)
    if not is_hermitian(j, 1e-9):
        return False
    if np.linalg.eigvalsh((j + dagger(j)) / 2)[0] < -tol:
        return False
    return trace_preservation_error(s) <= 1e-10 * max(1, d)


def trace_preservation_error(s: Superoperator) -> float:
    """``max |tr S(E_kl) - delta_kl|``; zero iff ``tr S(X) = tr X``."""
    d = s.hilbert_dim
    tr_row = vec(np.eye(d))
    target = tr_row if s.kind != "lindblad-generator" else np.zeros_like(tr_row)
    resid = s.matrix.T @ tr_row - target
    return float(np.max(np.abs(resid), initial=0.0))


def _as_sparse(op) -> sp.csr_matrix:
    return sp.csr_matrix(op, dtype=complex)


def _sum_sparse(parts, n: int) -> sp.csr_matrix:
    """Sum sparse matrices pairwise, which keeps every merge balanced."""
    parts = [sp.csr_matrix(p, dtype=complex) for p in parts]
    if not parts:
        return sp.csr_matrix((n, n), dtype=complex)
    while len(parts) > 1:
        parts = [parts[i] + parts[i + 1] if i + 1 < len(parts) else parts[i] for i in range(0, len(parts), 2)]
    m = parts[0]
    m.eliminate_zeros()
    return m


def lindblad_generator(h, lindblad_ops: Sequence = (), support: Region | None = None,
                       herm_tol: float = 1e-12) -> Superoperator:
    """Generator ``rho -> i[rho, H] + sum_j L_j rho L_j^+ - 1/2 {L_j^+ L_j, rho}``.

    ``h`` may be ``None`` (no Hamiltonian). Dense or sparse inputs are accepted.
    """
    ops = [_as_sparse(l) for l in lindblad_ops]
    if h is None and not ops:
        raise DomainError("need a Hamiltonian or at least one Lindblad operator")
    d = (ops[0] if ops else _as_sparse(h)).shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    parts = []
    if h is not None:
        hs = _as_sparse(h)
        if hs.shape != (d, d):
            raise DomainError("Hamiltonian and Lindblad operators differ in dimension")
        herr = abs(hs - hs.conj().T).max() if hs.nnz else 0.0
        scale_h = max(1.0, abs(hs).max() if hs.nnz else 0.0)
        if herr > herm_tol * scale_h:
            raise DomainError(f"Hamiltonian is not Hermitian (error {herr:.3g})")
        parts += [-1j * sp.kron(eye, hs, format="coo"), 1j * sp.kron(hs.T, eye, format="coo")]
    k = sp.csr_matrix((d, d), dtype=complex)
    for l in ops:
        if l.shape != (d, d):
            raise DomainError("Lindblad operators must share one dimension")
        k = k + l.conj().T @ l
        parts.append(sp.kron(l.conj(), l, format="coo"))
    if ops:
        parts += [-0.5 * sp.kron(eye, k, format="coo"), -0.5 * sp.kron(k.T, eye, format="coo")]
    m = _sum_sparse(parts, d * d)
    return Superoperator(m, d, support, "lindblad-generator")


# ---------------------------------------------------------------------------
# time evolution


def propagate(s: Superoperator, x: np.ndarray, t: float, tol: float = 1e-10,
              method: str = "auto", adjoint: bool = False) -> np.ndarray:
    """``exp(t S)(X)`` (or the adjoint map) without any state validation.

    ``tol`` bounds the trace-norm error of the result relative to ``||X||_1``.
    """
    if t < 0:
        raise DomainError("evolution time must be nonnegative")
    x = np.asarray(x, dtype=complex)
    if x.shape != (s.hilbert_dim, s.hilbert_dim):
        raise DomainError("operator dimension does not match the generator")
    if t == 0:
        return x.copy()
    m = s.matrix.conj().T.tocsr() if adjoint else s.matrix
    if method == "auto":
        method = "dense" if s.dim <= DENSE_EVOLVE_MAX else "krylov"
    if method == "dense":
        p = dense_propagator(s, t)
        out = (p.conj().T if adjoint else p) @ vec(x)
    elif method == "krylov":
        d = s.hilbert_dim
        # trace norm <= sqrt(d) * Frobenius norm; Expokit error grows ~ linearly in t
        vtol = tol / (np.sqrt(d) * max(1.0, t))
        out, _, _ = expm_krylov(m, vec(x), t, tol=vtol)
    else:
        raise DomainError(f"unknown method {method!r}")
    return unvec(out, s.hilbert_dim)


def evolve(s: Superoperator, rho: np.ndarray, t: float, tol: float = 1e-10,
           method: str = "auto", validate: bool = True) -> np.ndarray:
    """``exp(t S)(rho)`` for a Lindblad generator, re-validated as a state."""
    if s.kind != "lindblad-generator":
        raise DomainError("evolve needs a Lindblad generator")
    out = propagate(s, rho, t, tol, method)
    if t == 0:
        return out
    return validate_state(out) if validate else out


def hermitian_basis(d: int) -> sp.csr_matrix:
    """Unitary whose columns are ``vec`` of an orthonormal Hermitian operator basis.

    The basis is ``E_kk``, ``(E_kl + E_lk)/sqrt2`` and ``i(E_kl - E_lk)/sqrt2``
    for ``k < l``.
    """
    rows, cols, vals = [], [], []
    col = 0
    r2 = 1 / np.sqrt(2)
    for k in range(d):
        rows.append(k + k * d); cols.append(col); vals.append(1.0)
        col += 1
    for k in range(d):
        for l in range(k + 1, d):
            kl, lk = k + l * d, l + k * d  # vec index of E_kl and E_lk
            rows += [kl, lk]; cols += [col, col]; vals += [r2, r2]
            rows += [kl, lk]; cols += [col + 1, col + 1]; vals += [1j * r2, -1j * r2]
            col += 2
    return sp.csr_matrix((vals, (rows, cols)), shape=(d * d, d * d), dtype=complex)


def real_matrix(s: Superoperator, tol: float = 1e-12) -> sp.csr_matrix:
    """Matrix of a Hermiticity-preserving map in the basis of :func:`hermitian_basis`."""
    u = hermitian_basis(s.hilbert_dim)
    r = (u.conj().T @ s.matrix @ u).tocsr()
    scale = max(1.0, float(abs(r).max()) if r.nnz else 0.0)
    if r.nnz and abs(r.imag).max() > tol * scale:
        raise DomainError("map is not Hermiticity preserving")
    out = sp.csr_matrix(r.real)
    out.eliminate_zeros()
    return out


def dense_propagator(s: Superoperator, t: float) -> np.ndarray:
    """``expm(t S)`` by dense scaling and squaring.

    Hermiticity-preserving maps are exponentiated in the real Hermitian basis,
    which cuts the cost of the dense products by about four.
    """
    try:
        r = real_matrix(s)
    except DomainError:
        return sla.expm(t * s.dense())
    u = hermitian_basis(s.hilbert_dim)
    e = sla.expm(t * r.toarray())
    w = np.asarray(u @ e)
    return np.asarray(u.conj() @ w.T).T  # w @ u^+


# ---------------------------------------------------------------------------
# spectra and fixed points


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    zero_multiplicity: int
    spectral_gap: float
    peripheral_ok: bool
    complete: bool = True

    def to_csv(self) -> str:
        lines = ["re,im"]
        lines += [f"{z.real:.17g},{z.imag:.17g}" for z in self.eigenvalues]
        return "\n".join(lines) + "\n"


def _zero_tol(s: Superoperator) -> float:
    nrm = abs(s.matrix).sum(axis=1).max() if s.matrix.nnz else 0.0
    return 1e-8 * max(1.0, float(nrm))


def _summarise(evals: np.ndarray, ztol: float, complete: bool) -> SpectralData:
    evals = np.asarray(evals, dtype=complex)
    order = np.lexsort((evals.imag, -evals.real))
    evals = evals[order]
    is_zero = np.abs(evals) <= ztol
    nonzero = evals[~is_zero]
    gap = float(-nonzero.real.max()) if nonzero.size else 0.0
    gap = max(gap, 0.0)
    peripheral = bool(np.any(np.abs(nonzero.real) <= ztol))
    return SpectralData(evals, int(is_zero.sum()), gap, not peripheral, complete)


def spectral_data(s: Superoperator, k: int = 6) -> SpectralData:
    """Spectrum, zero multiplicity, spectral gap and peripheral check.

    Up to ``DENSE_EIG_MAX`` the full spectrum is computed densely. Above it,
    only the ``k`` eigenvalues with the largest real part are computed and
    ``complete`` is ``False``; see :func:`_sparse_spectrum`.
    """
    ztol = _zero_tol(s)
    if s.dim <= DENSE_EIG_MAX:
        try:
            evals = sla.eigvals(s.dense())
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError("dense eigensolver failed") from exc
        return _summarise(evals, ztol, True)
    try:
        rho = _sparse_fixed_point(s, 1e-10)
    except NumericalError:
        rho = None
    return _sparse_spectrum(s, k, rho)


def _sparse_spectrum(s: Superoperator, k: int, rho: np.ndarray | None) -> SpectralData:
    """Leading eigenvalues by implicitly restarted Arnoldi (largest real part).

    Krylov methods cannot see the multiplicity of an eigenvalue reliably, so
    the known fixed point is deflated first: ``S - c |rho>><<I|`` has the
    spectrum of ``S`` with one zero moved to ``-c``. Any remaining zero
    eigenvalue then shows up as the leading one.
    """
    ztol = max(_zero_tol(s), 1e-9)
    m = s.matrix
    k = min(k, s.dim - 2)
    if rho is None:
        op = m
        extra = []
    else:
        c = 2.0 * float(abs(m).sum(axis=1).max()) + 1.0
        r = vec(rho)
        tr_row = vec(np.eye(s.hilbert_dim))
        op = spla.LinearOperator(m.shape, matvec=lambda x: m @ x - c * r * (tr_row @ x), dtype=complex)
        extra = [0.0]
    v0 = np.random.default_rng(7).standard_normal(s.dim).astype(complex)
    try:
        evals = spla.eigs(op, k=k, which="LR", tol=1e-10, maxiter=20000, ncv=max(2 * k + 1, 40),
                          return_eigenvectors=False, v0=v0)
    except (spla.ArpackError, spla.ArpackNoConvergence) as exc:
        raise NumericalError("Arnoldi eigensolver failed") from exc
    return _summarise(np.concatenate([np.asarray(extra, dtype=complex), evals]), ztol, False)


def _null_space(m: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    u, sv, vh = np.linalg.svd(m)
    scale = max(sv[0] if sv.size else 0.0, 1.0)
    rank = int(np.sum(sv > rtol * scale))
    return dagger(vh[rank:])


def _state_from_kernel(s: Superoperator, kernel: np.ndarray) -> np.ndarray:
    d = s.hilbert_dim
    if kernel.shape[1] == 1:
        rho = unvec(kernel[:, 0], d)
        rho = rho / np.trace(rho)
    else:
        rho = apply(asymptotic_projector(s), np.eye(d) / d)
    return validate_state((rho + dagger(rho)) / 2, tol=1e-9)


def _bordered_gmres(s: Superoperator, maxiter: int = 3000):
    """Solve ``(S + |I/d>><<I|) x = I/d``; the solution is the fixed point when unique."""
    d = s.hilbert_dim
    m = s.matrix
    tr_row = vec(np.eye(d))
    rhs = vec(np.eye(d) / d).astype(complex)
    op = spla.LinearOperator(m.shape, matvec=lambda x: m @ x + rhs * (tr_row @ x), dtype=complex)
    x, info = spla.gmres(op, rhs, x0=rhs.copy(), rtol=1e-14, atol=0.0, restart=60, maxiter=maxiter)
    return x, info == 0


def _bordered_lu(s: Superoperator) -> np.ndarray:
    """Direct solve with the first row of ``S`` replaced by the trace functional."""
    d = s.hilbert_dim
    a = s.matrix.tolil(copy=True)
    tr_row = np.zeros(s.dim, dtype=complex)
    tr_row[np.arange(d) * (d + 1)] = 1
    a[0, :] = sp.lil_matrix(tr_row)
    a = a.tocsc()
    b = np.zeros(s.dim, dtype=complex)
    b[0] = 1
    try:
        lu = spla.splu(a, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise NumericalError("fixed-point system is singular; kernel is not one-dimensional") from exc
    x = lu.solve(b)
    for _ in range(2):
        x = x + lu.solve(b - a @ x)
    return x


def _lu_friendly(s: Superoperator) -> bool:
    """True when the sparsity pattern splits into many small blocks (LU stays sparse)."""
    m = s.matrix
    pattern = sp.csr_matrix((np.ones(m.nnz), m.indices, m.indptr), shape=m.shape)
    n_blocks, labels = connected_components(pattern, directed=True, connection="weak")
    return n_blocks > 1 and int(np.bincount(labels).max()) <= LU_BLOCK_MAX


def _sparse_fixed_point(s: Superoperator, tol: float, method: str = "auto") -> np.ndarray:
    """Bordered solve for the fixed point.

    With ``method="auto"``, generators whose pattern splits into small blocks
    (e.g. classical dynamics, where coherences decouple) factorise with little
    fill-in and go straight to LU; anything else tries restarted GMRES first.
    """
    d = s.hilbert_dim
    if method == "lu":
        return unvec(_bordered_lu(s), d)
    if method == "gmres":
        x, ok = _bordered_gmres(s)
        if not ok:
            raise NumericalError("GMRES did not converge on the fixed-point system")
        return unvec(x, d)
    blocky = _lu_friendly(s)
    if blocky:
        try:
            return unvec(_bordered_lu(s), d)
        except NumericalError:
            pass  # degenerate kernel: GMRES still finds a consistent solution
    x, ok = _bordered_gmres(s)
    if (not ok or trace_norm(unvec(s.matrix @ x, d)) > tol) and not blocky:
        x = _bordered_lu(s)
    return unvec(x, d)


def fixed_point_method(s: Superoperator) -> str:
    """The solver path ``fixed_point(method="auto")`` takes for ``s``."""
    if s.dim <= DENSE_NULL_MAX:
        return "dense"
    return "lu" if _lu_friendly(s) else "gmres"


def fixed_point(s: Superoperator, tol: float = 1e-10, check_unique: bool = True,
                method: str = "auto"):
    """Return ``(rho, unique)`` with ``rho`` a state in the kernel of ``s``.

    When the kernel has several states, ``rho`` is the image of the maximally
    mixed state under the asymptotic projector. ``method`` selects the solver:
    ``"dense"`` (null space by SVD), ``"lu"`` or ``"gmres"`` (bordered sparse
    solves) or ``"auto"``.
    """
    if s.kind != "lindblad-generator":
        raise DomainError("fixed_point needs a Lindblad generator")
    if method not in ("auto", "dense", "lu", "gmres"):
        raise DomainError(f"unknown fixed-point method {method!r}")
    if method == "dense" or (method == "auto" and s.dim <= DENSE_NULL_MAX):
        if s.dim > DENSE_EIG_MAX:
            raise ResourceError(f"dense fixed point of dimension {s.dim} exceeds {DENSE_EIG_MAX}")
        kernel = _null_space(s.dense())
        if kernel.shape[1] == 0:
            raise NumericalError("numerically empty kernel")
        rho = _state_from_kernel(s, kernel)
        spec = spectral_data(s)
        unique = spec.zero_multiplicity == 1 and spec.peripheral_ok and kernel.shape[1] == 1
    else:
        raw = _sparse_fixed_point(s, tol, method)
        rho = validate_state((raw + dagger(raw)) / 2, tol=1e-9)
        unique = True
        if check_unique:
            spec = spectral_data(s) if s.dim <= DENSE_EIG_MAX else _sparse_spectrum(s, 6, rho)
            unique = spec.zero_multiplicity == 1 and spec.peripheral_ok
    resid = trace_norm(apply(s, rho))
    if resid > tol * max(1.0, _zero_tol(s) * 1e8):
        raise NumericalError("fixed point residual above tolerance", residual=resid)
    return rho, bool(unique)


def fixed_point_basis(s: Superoperator) -> list[np.ndarray]:
    """States spanning the fixed-point set (dense; small systems only)."""
    if s.dim > DENSE_EIG_MAX:
        rho, unique = fixed_point(s)
        if not unique:
            raise ResourceError("fixed-point basis of a degenerate generator needs a dense solve")
        return [rho]
    kernel = _null_space(s.dense())
    if kernel.shape[1] == 1:
        return [_state_from_kernel(s, kernel)]
    # the kernel is spanned by Hermitian operators; split each into positive parts
    p = asymptotic_projector(s)
    d = s.hilbert_dim
    states = []
    rng = np.random.default_rng(12345)
    basis_out = []
    for k in range(kernel.shape[1] * 2):
        psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        psi /= np.linalg.norm(psi)
        r = apply(p, np.outer(psi, psi.conj()))
        r = (r + dagger(r)) / 2
        states.append(validate_state(r / np.trace(r), tol=1e-9))
    # keep a linearly independent subset
    for r in states:
        cand = basis_out + [vec(r)]
        if np.linalg.matrix_rank(np.array(cand).T, tol=1e-8) == len(cand):
            basis_out.append(vec(r))
    return [unvec(v, d) for v in basis_out]


def asymptotic_projector(s: Superoperator) -> Superoperator:
    """Spectral projector onto ``ker S`` along the range of ``S``."""
    if s.kind != "lindblad-generator" and s.matrix.nnz:
        raise DomainError("asymptotic_projector needs a Lindblad generator")
    d = s.hilbert_dim
    if s.dim > PROJECTOR_MAX:
        raise ResourceError(f"projector of dimension {s.dim} exceeds {PROJECTOR_MAX}")
    if s.dim <= DENSE_EIG_MAX:
        m = s.dense()
        right = _null_space(m)
        left = _null_space(dagger(m))
        if right.shape[1] != left.shape[1] or right.shape[1] == 0:
            raise NumericalError("left and right kernels differ in dimension",
                                 right=right.shape[1], left=left.shape[1])
        g = dagger(left) @ right
        if np.linalg.cond(g) > 1e8:
            raise NumericalError("zero eigenvalue is defective", condition=float(np.linalg.cond(g)))
        p = right @ np.linalg.solve(g, dagger(left))
    else:
        rho, unique = fixed_point(s)
        if not unique:
            raise ResourceError("degenerate projector above the dense limit")
        p = sp.csr_matrix(np.outer(vec(rho), vec(np.eye(d))))
    return Superoperator(sp.csr_matrix(p), d, s.support, "projector")


# ---------------------------------------------------------------------------
# norms


def _polar_unitary(y: np.ndarray) -> np.ndarray:
    """``W`` with ``tr(W Y) = ||Y||_1`` and ``||W|| = 1``."""
    u, _, vh = np.linalg.svd(y)
    return dagger(vh) @ dagger(u)


def one_to_one_norm(s: Superoperator, restarts: int = 8, seed: int = 0,
                    max_iter: int = 200, tol: float = 1e-12) -> float:
    """Lower-bound estimate of ``sup ||S(X)||_1 / ||X||_1``.

    Alternating ascent over rank-one inputs ``|psi><phi|``: for the current
    input take the dual contraction ``W`` of ``S(X)``, then replace
    ``(psi, phi)`` by the top singular pair of ``S^+(W)``. Each step cannot
    decrease the objective.
    """
    d = s.hilbert_dim
    rng = np.random.default_rng(seed)
    adj = s.matrix.conj().T.tocsr()
    best = 0.0
    seeds = [(np.eye(d)[0], np.eye(d)[0])]
    if d > 1:
        seeds.append((np.eye(d)[0], np.eye(d)[1]))
    while len(seeds) < max(restarts, 1):
        a = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        b = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        seeds.append((a / np.linalg.norm(a), b / np.linalg.norm(b)))
    for psi, phi in seeds[:max(restarts, 1)]:
        value = 0.0
        for _ in range(max_iter):
            y = unvec(s.matrix @ vec(np.outer(psi, phi.conj())), d)
            new = trace_norm(y)
            w = _polar_unitary(y)
            g = unvec(adj @ vec(dagger(w)), d)
            u, _, vh = np.linalg.svd(g)
            # maximise |<phi'| G |psi'>|: phi' = u[:,0], psi' = vh[0]^*
            phi, psi = u[:, 0], vh[0].conj()
            if new - value <= tol * max(1.0, new):
                value = max(value, new)
                break
            value = new
        best = max(best, value)
    return best


def _row_major(m: np.ndarray, d: int) -> np.ndarray:
    """Re-index a column-stacked matrix to ``[(a,b),(i,j)] = S(|i><j|)[a,b]``."""
    return m.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d * d, d * d)


def diamond_norm(s: Superoperator, tol: float = 1e-9, restarts: int = 4, seed: int = 0,
                 max_iter: int = 2000) -> float:
    """Diamond norm of a Hermiticity-preserving map by ascent over pure inputs.

    The objective ``||(S kron id)(|psi><psi|)||_1`` over unit vectors ``psi``
    on system plus a copy of the system equals the Choi formulation
    ``max_rho ||(sqrt(rho) kron I) J (sqrt(rho) kron I)||_1``. Each iteration
    fixes the sign operator ``W`` of the output and moves ``psi`` to the top
    eigenvector of ``(S^+ kron id)(W)``, which never lowers the objective.
    The result is a lower bound that is exact at any global maximiser.
    """
    d = s.hilbert_dim
    if d > 64:
        raise DomainError("diamond_norm supports Hilbert dimension up to 64")
    srm = _row_major(s.dense(), d)
    srm_t = srm.T
    rng = np.random.default_rng(seed)

    def objective(psi_mat):
        p = np.einsum("ik,jl->ijkl", psi_mat, psi_mat.conj()).reshape(d * d, d * d)
        y = (srm @ p).reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
        y = (y + dagger(y)) / 2
        w, v = np.linalg.eigh(y)
        return float(np.abs(w).sum()), (v * np.sign(w)) @ dagger(v)

    starts = [np.eye(d, dtype=complex) / np.sqrt(d)]
    while len(starts) < max(restarts, 1):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        starts.append(g / np.linalg.norm(g))
    best = 0.0
    for psi_mat in starts:
        value, w = objective(psi_mat)
        converged = False
        for _ in range(max_iter):
            w4 = w.reshape(d, d, d, d)  # [b, l, a, k]
            g = w4.transpose(2, 0, 1, 3).reshape(d * d, d * d)  # [(a,b),(l,k)]
            q = (srm_t @ g).reshape(d, d, d, d)  # [i, j, l, k]
            q = q.transpose(1, 2, 0, 3).reshape(d * d, d * d)  # [(j,l),(i,k)]
            q = (q + dagger(q)) / 2
            _, vecs = np.linalg.eigh(q)
            psi_mat = vecs[:, -1].reshape(d, d)
            new, w = objective(psi_mat)
            if new - value <= tol * max(1.0, new):
                value = max(value, new)
                converged = True
                break
            value = new
        if not converged:
            raise NumericalError("diamond-norm ascent did not converge", best=max(best, value))
        best = max(best, value)
    return best
