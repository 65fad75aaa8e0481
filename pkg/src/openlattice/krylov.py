"""Krylov (Arnoldi) approximation of ``exp(tA) v`` with adaptive time stepping.

The stepping and error control follow Sidje's Expokit ``expv``: each step
builds an ``m``-dimensional Arnoldi basis, exponentiates the small
Hessenberg matrix densely and estimates the local error from the next
Krylov coefficient. Steps are rejected and shrunk until the local error is
below ``tol * step``. The Arnoldi process stops early at a smaller basis
dimension when that dimension already meets the local tolerance, which
matters when the vectors are large and orthogonalisation dominates.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import NumericalError

_EPS = np.finfo(float).eps


def _round_step(x: float) -> float:
    s = 10.0 ** (math.floor(math.log10(x)) - 1)
    return math.ceil(x / s) * s


def inf_norm(a) -> float:
    if sp.issparse(a):
        return float(abs(a).sum(axis=1).max()) if a.nnz else 0.0
    return float(np.abs(a).sum(axis=1).max(initial=0.0))


_MIN_CHECK, _CHECK_EVERY = 8, 4


def _step_error(H: np.ndarray, mb: int, beta: float, avnorm: float, t_step: float, sgn: float):
    """Exponentiate the augmented Hessenberg matrix of dimension ``mb`` and estimate the local error."""
    hs = H[: mb + 2, : mb + 2].copy()
    hs[:, mb] = 0.0
    hs[mb + 1, :] = 0.0
    hs[mb + 1, mb] = 1.0
    F = sla.expm(sgn * t_step * hs)
    phi1 = abs(beta * F[mb, 0])
    phi2 = abs(beta * F[mb + 1, 0] * avnorm)
    if phi1 > 10 * phi2:
        return F, phi2, 1.0 / mb
    if phi1 > phi2:
        return F, (phi1 * phi2) / (phi1 - phi2), 1.0 / mb
    return F, phi1, 1.0 / max(mb - 1, 1)


def expm_krylov(a, v: np.ndarray, t: float, tol: float = 1e-10, m: int = 30,
                max_steps: int = 100_000, max_reject: int = 10):
    """Return ``(exp(t a) v, error_estimate, steps)``.

    ``a`` is anything supporting ``a @ x`` plus an infinity-norm estimate via
    :func:`inf_norm`. ``tol`` bounds the accumulated 2-norm error per unit
    time, relative to ``||v||``.
    """
    v = np.asarray(v, dtype=complex)
    n = v.shape[0]
    t_out = abs(float(t))
    beta = float(np.linalg.norm(v))
    if t_out == 0.0 or beta == 0.0:
        return v.copy(), 0.0, 0
    anorm = inf_norm(a)
    if anorm == 0.0:
        return v.copy(), 0.0, 0
    sgn = 1.0 if t >= 0 else -1.0
    m = max(1, min(m, n))
    tol = tol * beta
    btol = 1e-12 * beta
    gamma, delta = 0.9, 1.2
    rndoff = anorm * _EPS
    # local errors below this are roundoff; never shrink the step for them
    floor = max(10 * m * _EPS * beta, rndoff)
    xm = 1.0 / m
    fact = ((m + 1) / math.e) ** (m + 1) * math.sqrt(2 * math.pi * (m + 1))
    t_new = (1.0 / anorm) * ((fact * tol) / (4.0 * beta * anorm)) ** xm
    t_new = _round_step(t_new)
    t_now = 0.0
    w = v.copy()
    V = np.empty((m + 1, n), dtype=complex)
    s_error = 0.0
    steps = 0
    while t_now < t_out:
        steps += 1
        if steps > max_steps:
            raise NumericalError("Krylov exponential exceeded the step budget",
                                 t_reached=t_now, t_target=t_out, steps=steps)
        t_step = min(t_out - t_now, t_new)
        # basis vectors are stored as contiguous rows
        V[0] = w / beta
        H = np.zeros((m + 2, m + 2), dtype=complex)
        happy = False
        mb = m
        accepted = None
        p = a @ V[0]
        for j in range(m):
            # classical Gram-Schmidt, reorthogonalised when cancellation is severe
            basis = V[: j + 1]
            before = float(np.linalg.norm(p))
            h = (basis @ p.conj()).conj()
            p -= h @ basis
            s = float(np.linalg.norm(p))
            if s < 0.7 * before:
                h2 = (basis @ p.conj()).conj()
                p -= h2 @ basis
                h += h2
                s = float(np.linalg.norm(p))
            H[: j + 1, j] = h
            if s < btol:
                happy = True
                mb = j + 1
                t_step = t_out - t_now
                break
            H[j + 1, j] = s
            V[j + 1] = p / s
            p = a @ V[j + 1]
            dim = j + 1
            # stop early once a smaller basis already meets the tolerance
            if dim < m and dim >= _MIN_CHECK and dim % _CHECK_EVERY == 0:
                F, err_loc, xm_try = _step_error(H, dim, beta, float(np.linalg.norm(p)), t_step, sgn)
                if err_loc <= max(delta * t_step * tol, floor):
                    mb, accepted = dim, (F, err_loc, xm_try)
                    break
        if happy:
            F = sla.expm(sgn * t_step * H[:mb, :mb])
            err_loc = btol
        elif accepted is not None:
            F, err_loc, xm = accepted
        else:
            avnorm = float(np.linalg.norm(p))
            ireject = 0
            while True:
                F, err_loc, xm = _step_error(H, m, beta, avnorm, t_step, sgn)
                if err_loc <= max(delta * t_step * tol, floor):
                    break
                if ireject >= max_reject:
                    raise NumericalError("Krylov step rejected too often",
                                         t_reached=t_now, local_error=err_loc, step=t_step)
                t_step = _round_step(gamma * t_step * (t_step * tol / err_loc) ** xm)
                ireject += 1
        mx = mb if happy else mb + 1
        w = (beta * F[:mx, 0]) @ V[:mx]
        beta = float(np.linalg.norm(w))
        t_now += t_step
        if beta == 0.0:
            return w, s_error, steps
        if err_loc <= floor:
            t_new = _round_step(2 * t_step)
        else:
            t_new = _round_step(gamma * t_step * (t_step * tol / err_loc) ** xm)
        s_error += err_loc
    return w, s_error, steps
