"""Dense complex linear-algebra kernels.

Each kernel has a numba implementation (``*_nb``) and a pure-numpy twin
(``*_np``) running the same algorithm; the public wrappers dispatch on the
backend chosen in :mod:`bolax._backend`.

    lu_factor      LU with partial pivoting, reports pivot growth
    lu_solve       forward/back substitution for one or many right-hand sides
    hessenberg     Householder reduction to upper Hessenberg form
    qr_eigvals     complex single-shift implicit QR on a Hessenberg matrix
    power_norm     largest singular value by power iteration on B^H B
"""

import numpy as np

from ._backend import get_backend, jit
from .errors import NonConvergedPowerIteration, QRNonconvergence

# --------------------------------------------------------------------------
# LU with partial pivoting
# --------------------------------------------------------------------------


@jit
def _lu_factor_nb(a):
    n = a.shape[0]
    lu = a.copy()
    piv = np.arange(n)
    amax = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(lu[i, j])
            if v > amax:
                amax = v
    for k in range(n):
        p = k
        best = abs(lu[k, k])
        for i in range(k + 1, n):
            v = abs(lu[i, k])
            if v > best:
                best = v
                p = i
        piv[k] = p
        if p != k:
            for j in range(n):
                tmp = lu[k, j]
                lu[k, j] = lu[p, j]
                lu[p, j] = tmp
        pivot = lu[k, k]
        if pivot == 0:
            continue
        for i in range(k + 1, n):
            f = lu[i, k] / pivot
            lu[i, k] = f
            if f != 0:
                for j in range(k + 1, n):
                    lu[i, j] -= f * lu[k, j]
    umax = 0.0
    for i in range(n):
        for j in range(i, n):
            v = abs(lu[i, j])
            if v > umax:
                umax = v
    growth = umax / amax if amax > 0 else 1.0
    return lu, piv, growth


def _lu_factor_np(a):
    lu = np.array(a, dtype=np.complex128, copy=True)
    n = lu.shape[0]
    piv = np.arange(n)
    amax = np.abs(lu).max() if n else 0.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        piv[k] = p
        if p != k:
            lu[[k, p]] = lu[[p, k]]
        if lu[k, k] == 0:
            continue
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    umax = np.abs(np.triu(lu)).max() if n else 0.0
    growth = umax / amax if amax > 0 else 1.0
    return lu, piv, growth


@jit
def _lu_solve_nb(lu, piv, b):
    n = lu.shape[0]
    m = b.shape[1]
    x = b.copy()
    for k in range(n):
        p = piv[k]
        if p != k:
            for c in range(m):
                tmp = x[k, c]
                x[k, c] = x[p, c]
                x[p, c] = tmp
    for i in range(n):
        for j in range(i):
            f = lu[i, j]
            if f != 0:
                for c in range(m):
                    x[i, c] -= f * x[j, c]
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n):
            f = lu[i, j]
            if f != 0:
                for c in range(m):
                    x[i, c] -= f * x[j, c]
        d = lu[i, i]
        if d == 0:
            # exact zero pivot: poison the row instead of raising
            for c in range(m):
                x[i, c] = complex(np.nan, np.nan)
            continue
        for c in range(m):
            x[i, c] /= d
    return x


def _lu_solve_np(lu, piv, b):
    x = np.array(b, dtype=np.complex128, copy=True)
    n = lu.shape[0]
    for k in range(n):
        p = piv[k]
        if p != k:
            x[[k, p]] = x[[p, k]]
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def lu_factor(a):
    """Factor ``P a = L U``.

    Returns ``(lu, piv, growth)`` in LAPACK layout: unit lower factor below
    the diagonal, ``U`` on and above it, ``piv[k]`` the row swapped with
    row ``k``. ``growth`` is ``max|U| / max|a|``.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if get_backend() == "numba":
        lu, piv, growth = _lu_factor_nb(a)
    else:
        lu, piv, growth = _lu_factor_np(a)
    return lu, piv, float(growth)


def lu_solve(lu, piv, b):
    b = np.asarray(b, dtype=np.complex128)
    vector = b.ndim == 1
    rhs = np.ascontiguousarray(b.reshape(b.shape[0], -1))
    if get_backend() == "numba":
        x = _lu_solve_nb(lu, piv, rhs)
    else:
        x = _lu_solve_np(lu, piv, rhs)
    return x[:, 0] if vector else x


# --------------------------------------------------------------------------
# Hessenberg reduction and shifted QR
# --------------------------------------------------------------------------


@jit
def _hessenberg_nb(a):
    h = a.copy()
    n = h.shape[0]
    v = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        m = n - k - 1
        alpha = 0.0
        for i in range(m):
            alpha += abs(h[k + 1 + i, k]) ** 2
        alpha = np.sqrt(alpha)
        if alpha == 0.0:
            continue
        x0 = h[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0 else 1.0 + 0.0j
        for i in range(m):
            v[i] = h[k + 1 + i, k]
        v[0] += phase * alpha
        vn = 0.0
        for i in range(m):
            vn += abs(v[i]) ** 2
        vn = np.sqrt(vn)
        for i in range(m):
            v[i] /= vn
        for j in range(k, n):
            s = 0.0 + 0.0j
            for i in range(m):
                s += np.conj(v[i]) * h[k + 1 + i, j]
            s *= 2.0
            for i in range(m):
                h[k + 1 + i, j] -= v[i] * s
        for i in range(n):
            s = 0.0 + 0.0j
            for j in range(m):
                s += h[i, k + 1 + j] * v[j]
            s *= 2.0
            for j in range(m):
                h[i, k + 1 + j] -= s * np.conj(v[j])
        for i in range(k + 2, n):
            h[i, k] = 0.0
    return h


def _hessenberg_np(a):
    h = np.array(a, dtype=np.complex128, copy=True)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h


@jit
def _givens(x, y):
    ax = abs(x)
    ay = abs(y)
    if ay == 0.0:
        return 1.0, 0.0 + 0.0j
    if ax == 0.0:
        return 0.0, np.conj(y) / ay
    nrm = np.sqrt(ax * ax + ay * ay)
    alpha = x / ax
    return ax / nrm, alpha * np.conj(y) / nrm


@jit
def _wilkinson(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    m1 = 0.5 * (a + d) + disc
    m2 = 0.5 * (a + d) - disc
    if abs(m1 - d) <= abs(m2 - d):
        return m1
    return m2


@jit
def _qr_eigvals_nb(h_in, tol, maxit):
    h = h_in.copy()
    n = h.shape[0]
    eig = np.zeros(n, dtype=np.complex128)
    ihi = n - 1
    its = 0
    total = 0
    while ihi >= 0:
        lo = ihi
        while lo > 0:
            if abs(h[lo, lo - 1]) <= tol:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == ihi:
            eig[ihi] = h[ihi, ihi]
            ihi -= 1
            its = 0
            continue
        if total >= maxit:
            return eig, ihi + 1
        if its == 10 or its == 20:
            mu = h[ihi, ihi] + 0.75 * abs(h[ihi, ihi - 1])
        else:
            mu = _wilkinson(h[ihi - 1, ihi - 1], h[ihi - 1, ihi], h[ihi, ihi - 1], h[ihi, ihi])
        for k in range(lo, ihi):
            if k == lo:
                x = h[lo, lo] - mu
                y = h[lo + 1, lo]
            else:
                x = h[k, k - 1]
                y = h[k + 1, k - 1]
            c, s = _givens(x, y)
            jstart = lo if k == lo else k - 1
            for j in range(jstart, ihi + 1):
                t1 = h[k, j]
                t2 = h[k + 1, j]
                h[k, j] = c * t1 + s * t2
                h[k + 1, j] = -np.conj(s) * t1 + c * t2
            if k > lo:
                h[k + 1, k - 1] = 0.0
            iend = min(k + 2, ihi)
            for i in range(lo, iend + 1):
                t1 = h[i, k]
                t2 = h[i, k + 1]
                h[i, k] = c * t1 + np.conj(s) * t2
                h[i, k + 1] = -s * t1 + c * t2
        its += 1
        total += 1
    return eig, 0


def _qr_eigvals_np(h_in, tol, maxit):
    h = np.array(h_in, dtype=np.complex128, copy=True)
    n = h.shape[0]
    eig = np.zeros(n, dtype=np.complex128)
    ihi = n - 1
    its = 0
    total = 0
    while ihi >= 0:
        sub = np.abs(np.diagonal(h, -1)[:ihi])
        small = np.nonzero(sub <= tol)[0]
        lo = int(small[-1]) + 1 if small.size else 0
        if lo > 0:
            h[lo, lo - 1] = 0.0
        if lo == ihi:
            eig[ihi] = h[ihi, ihi]
            ihi -= 1
            its = 0
            continue
        if total >= maxit:
            return eig, ihi + 1
        if its in (10, 20):
            mu = h[ihi, ihi] + 0.75 * abs(h[ihi, ihi - 1])
        else:
            mu = _wilkinson_py(h[ihi - 1, ihi - 1], h[ihi - 1, ihi], h[ihi, ihi - 1], h[ihi, ihi])
        for k in range(lo, ihi):
            if k == lo:
                x, y = h[lo, lo] - mu, h[lo + 1, lo]
            else:
                x, y = h[k, k - 1], h[k + 1, k - 1]
            c, s = _givens_py(x, y)
            jstart = lo if k == lo else k - 1
            rows = h[k:k + 2, jstart:ihi + 1].copy()
            h[k, jstart:ihi + 1] = c * rows[0] + s * rows[1]
            h[k + 1, jstart:ihi + 1] = -np.conj(s) * rows[0] + c * rows[1]
            if k > lo:
                h[k + 1, k - 1] = 0.0
            iend = min(k + 2, ihi)
            cols = h[lo:iend + 1, k:k + 2].copy()
            h[lo:iend + 1, k] = c * cols[:, 0] + np.conj(s) * cols[:, 1]
            h[lo:iend + 1, k + 1] = -s * cols[:, 0] + c * cols[:, 1]
        its += 1
        total += 1
    return eig, 0


def _givens_py(x, y):
    ax, ay = abs(x), abs(y)
    if ay == 0.0:
        return 1.0, 0.0j
    if ax == 0.0:
        return 0.0, np.conj(y) / ay
    nrm = np.hypot(ax, ay)
    return ax / nrm, (x / ax) * np.conj(y) / nrm


def _wilkinson_py(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(complex(half * half + b * c))
    m1 = 0.5 * (a + d) + disc
    m2 = 0.5 * (a + d) - disc
    return m1 if abs(m1 - d) <= abs(m2 - d) else m2


def hessenberg(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if get_backend() == "numba":
        return _hessenberg_nb(a)
    return _hessenberg_np(a)


def qr_eigvals(a, rel_tol=1e-13, max_sweeps_per_eig=30):
    """All eigenvalues of a dense complex matrix.

    Reduces to Hessenberg form, then runs single-shift implicit QR with
    Wilkinson shifts. A subdiagonal entry deflates once it is below
    ``rel_tol * ||a||_1``. At most ``max_sweeps_per_eig * n`` QR sweeps are
    run in total before :class:`QRNonconvergence` is raised.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.complex128)
    norm1 = float(np.abs(a).sum(axis=0).max())
    tol = rel_tol * norm1 if norm1 > 0 else 0.0
    maxit = max_sweeps_per_eig * n
    h = hessenberg(a)
    if get_backend() == "numba":
        eig, fail = _qr_eigvals_nb(h, tol, maxit)
    else:
        eig, fail = _qr_eigvals_np(h, tol, maxit)
    if fail:
        raise QRNonconvergence(
            f"QR iteration did not converge after {maxit} sweeps; "
            f"{fail} eigenvalue(s) unresolved"
        )
    return eig


# --------------------------------------------------------------------------
# Power iteration for the spectral norm
# --------------------------------------------------------------------------


@jit
def _power_norm_nb(b, x0, rtol, maxit):
    n = b.shape[0]
    m = b.shape[1]
    x = x0.copy()
    y = np.empty(n, dtype=np.complex128)
    nrm = 0.0
    for i in range(m):
        nrm += abs(x[i]) ** 2
    nrm = np.sqrt(nrm)
    for i in range(m):
        x[i] /= nrm
    sigma = 0.0
    for it in range(1, maxit + 1):
        for i in range(n):
            s = 0.0 + 0.0j
            for j in range(m):
                s += b[i, j] * x[j]
            y[i] = s
        ynorm = 0.0
        for i in range(n):
            ynorm += abs(y[i]) ** 2
        ynorm = np.sqrt(ynorm)
        if ynorm == 0.0:
            return 0.0, it, True
        for j in range(m):
            s = 0.0 + 0.0j
            for i in range(n):
                s += np.conj(b[i, j]) * y[i]
            x[j] = s
        xn = 0.0
        for j in range(m):
            xn += abs(x[j]) ** 2
        xn = np.sqrt(xn)
        for j in range(m):
            x[j] /= xn
        if abs(ynorm - sigma) <= rtol * ynorm:
            return ynorm, it, True
        sigma = ynorm
    return sigma, maxit, False


def _power_norm_np(b, x0, rtol, maxit):
    x = x0 / np.linalg.norm(x0)
    sigma = 0.0
    bh = b.conj().T
    for it in range(1, maxit + 1):
        y = b @ x
        ynorm = np.linalg.norm(y)
        if ynorm == 0.0:
            return 0.0, it, True
        x = bh @ y
        x /= np.linalg.norm(x)
        if abs(ynorm - sigma) <= rtol * ynorm:
            return ynorm, it, True
        sigma = ynorm
    return sigma, maxit, False


def power_norm(b, rtol=1e-8, maxit=10000, seed=0):
    """Spectral norm ``||b||_2`` by power iteration on ``b^H b``."""
    b = np.ascontiguousarray(b, dtype=np.complex128)
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(b.shape[1]) + 1j * rng.standard_normal(b.shape[1])
    if get_backend() == "numba":
        sigma, its, ok = _power_norm_nb(b, x0, rtol, maxit)
    else:
        sigma, its, ok = _power_norm_np(b, x0, rtol, maxit)
    if not ok:
        raise NonConvergedPowerIteration(
            f"power iteration not converged after {maxit} iterations (estimate {sigma:.6g})"
        )
    return float(sigma)
