"""Galerkin truncation of the Lax operator ``L_u = D - T_u`` and its resolvent."""

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import SingularResolvent
from .fourier import SobolevParams, sobolev_norm

RESIDUAL_RTOL = 1e-10


class LaxMatrix:
    """Dense ``K x K`` matrix ``M[m, k] = k delta_{mk} - uhat(m - k)`` on modes ``0..K-1``.

    Columns ``k <= K-1-B`` carry no truncation error.
    """

    def __init__(self, potential, K):
        if K < 2:
            raise ValueError("K must be >= 2")
        self.potential = potential
        self.K = int(K)
        B = potential.band
        d = np.subtract.outer(np.arange(K), np.arange(K))
        inband = np.abs(d) <= B
        uhat = potential.dense()
        toep = np.zeros((K, K), dtype=np.complex128)
        toep[inband] = uhat[d[inband] + B]
        mat = np.diag(np.arange(K, dtype=np.complex128)) - toep
        mat.setflags(write=False)
        self.matrix = mat
        self.norm1 = float(np.abs(mat).sum(axis=0).max())
        self._resolvent = None
        self._lock = threading.Lock()

    def apply(self, h):
        return self.matrix @ np.asarray(h, dtype=np.complex128)

    def resolvent(self):
        """Shared :class:`Resolvent` with a per-λ factorization cache."""
        with self._lock:
            if self._resolvent is None:
                self._resolvent = Resolvent(self)
            return self._resolvent

    def __repr__(self):
        return f"LaxMatrix(K={self.K}, band={self.potential.band})"


def build_lax_matrix(u, K):
    return LaxMatrix(u, K)


def unit_vector(K, k=0):
    e = np.zeros(K, dtype=np.complex128)
    e[k] = 1.0
    return e


class Resolvent:
    """LU-based solves with ``L - λ``; factorizations are cached per λ (LRU)."""

    def __init__(self, L, maxsize=64, rtol=RESIDUAL_RTOL):
        self.L = L
        self.rtol = rtol
        self.maxsize = maxsize
        self._cache = OrderedDict()
        self._lock = threading.Lock()

    def factor(self, lam):
        lam = complex(lam)
        with self._lock:
            hit = self._cache.get(lam)
            if hit is not None:
                self._cache.move_to_end(lam)
                return hit
        # factor outside the lock; a concurrent duplicate is harmless
        shifted = self.L.matrix - lam * np.eye(self.L.K)
        fac = kernels.lu_factor(shifted)
        with self._lock:
            self._cache[lam] = fac
            while len(self._cache) > self.maxsize:
                self._cache.popitem(last=False)
        return fac

    def pivot_growth(self, lam):
        return self.factor(lam)[2]

    def solve(self, lam, b):
        """Solve ``(L - λ) x = b``; raises :class:`SingularResolvent` on a bad residual."""
        lam = complex(lam)
        b = np.asarray(b, dtype=np.complex128)
        lu, piv, _ = self.factor(lam)
        with np.errstate(all="ignore"):
            x = kernels.lu_solve(lu, piv, b)
            res = self.L.matrix @ x - lam * x - b
        bnorm = np.linalg.norm(b)
        rnorm = np.linalg.norm(res)
        if not np.isfinite(rnorm) or rnorm > self.rtol * max(bnorm, np.finfo(float).tiny):
            raise SingularResolvent(
                f"resolvent solve at λ={lam:.6g} has relative residual "
                f"{rnorm / bnorm if bnorm else math.inf:.3g}"
            )
        return x

    def inverse(self, lam):
        return self.solve(lam, np.eye(self.L.K, dtype=np.complex128))


def resolvent_solve(L, lam, b):
    """``(L - λ)^{-1} b`` via cached dense LU with partial pivoting."""
    return L.resolvent().solve(lam, b)


def apply_toeplitz(u, h):
    """``T_u h = Π(u h)`` truncated to the length of ``h``."""
    h = np.asarray(h, dtype=np.complex128)
    B = u.band
    return np.convolve(u.dense(), h)[B:B + len(h)]


class NeumannResult(NamedTuple):
    x: np.ndarray
    converged: bool
    terms: int
    diverged: bool
    ratio: float


def _nearest_index(lam):
    return max(0, int(math.floor(complex(lam).real + 0.5)))


def neumann_resolvent(u, lam, b, kmax, s=0.0, shift=None, tol=1e-12):
    """Partial sum of ``sum_m (D - λ)^{-1} (T_u (D - λ)^{-1})^m b``.

    ``converged`` once an increment's ``-s`` norm drops below ``tol * ||b||_{-s}``;
    ``diverged`` when increments grow three times in a row. ``ratio`` is the
    largest measured step ratio ``||z_m|| / ||z_{m-1}||`` in the shifted
    ``-s`` norm, ``z_m = (T_u (D - λ)^{-1})^m b``.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    b = np.asarray(b, dtype=np.complex128)
    K = len(b)
    lam = complex(lam)
    denom = np.arange(K) - lam
    if np.any(denom == 0):
        raise ValueError("λ coincides with an eigenvalue of D")
    n = _nearest_index(lam) if shift is None else shift
    bnorm = sobolev_norm(b, -s)
    y = b / denom
    x = y.copy()
    z_prev = sobolev_norm(b, -s, shift=n)
    inc_prev = sobolev_norm(y, -s)
    ratio = 0.0
    growing = 0
    for m in range(1, kmax):
        z = apply_toeplitz(u, y)
        y = z / denom
        x += y
        zn = sobolev_norm(z, -s, shift=n)
        if z_prev > 0:
            ratio = max(ratio, zn / z_prev)
        z_prev = zn
        inc = sobolev_norm(y, -s)
        if inc <= tol * bnorm:
            return NeumannResult(x, True, m, False, ratio)
        growing = growing + 1 if inc > inc_prev else 0
        inc_prev = inc
        if growing >= 3:
            return NeumannResult(x, False, m + 1, True, ratio)
    return NeumannResult(x, False, kmax, False, ratio)


def block_operator(u, lam, K):
    """Truncation of ``T_u (D - λ)^{-1}``: entries ``uhat(m-k) / (k - λ)``."""
    L = LaxMatrix(u, K)
    toep = np.diag(np.arange(K, dtype=np.complex128)) - L.matrix
    return toep / (np.arange(K) - complex(lam))[None, :]


def norm_weights(K, s, n=None):
    k = np.arange(K) - (0 if n is None else n)
    return np.maximum(1, np.abs(k)).astype(float) ** (-s)


def weighted_block_norm(u, lam, n, params, K, rtol=1e-8, maxit=10000):
    """Operator norm of ``T_u (D - λ)^{-1}`` on the ``K``-truncation in ``||.||_{-s;n}``.

    ``n=None`` gives the unshifted ``-s`` norm. Computed by power iteration on
    the weight-similarity transformed matrix.
    """
    if isinstance(params, (int, float)):
        params = SobolevParams(float(params))
    A = block_operator(u, lam, K)
    w = norm_weights(K, params.s, n)
    Bw = (w[:, None] * A) / w[None, :]
    if not np.any(Bw):
        return 0.0
    return kernels.power_norm(Bw, rtol=rtol, maxit=maxit)


@dataclass(frozen=True)
class VertRegion:
    """``{λ : |λ - τ| >= r, Re τ - ν_left <= Re λ <= Re τ + ν_right}`` (closed)."""

    center: complex
    r: float
    nu_left: float
    nu_right: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("inner radius must be >= 0")

    def contains(self, lam):
        lam = complex(lam)
        c = complex(self.center)
        if abs(lam - c) < self.r:
            return False
        return (c.real - self.nu_left) <= lam.real <= (c.real + self.nu_right)

    def sample(self, count=60, height=3.0):
        """Deterministic boundary-heavy sample of points inside the region."""
        c = complex(self.center)
        pts = []
        n_circ = max(8, count // 3)
        theta = 2 * np.pi * (np.arange(n_circ) + 0.5) / n_circ
        r_out = self.r * (1 + 1e-12)
        pts.extend(c + r_out * np.exp(1j * theta))
        n_edge = max(4, count // 6)
        t = np.linspace(-1.0, 1.0, n_edge)
        ims = height * np.sign(t) * np.abs(t) ** 3
        right = c.real + self.nu_right
        pts.extend(right + 1j * ims)
        if math.isinf(self.nu_left):
            for off in (0.5, 1.0, 3.0, 10.0, 50.0):
                pts.extend((c.real - self.r - off) + 1j * ims[:: max(1, n_edge // 4)])
        else:
            pts.extend((c.real - self.nu_left) + 1j * ims)
        n_int = max(4, count - len(pts))
        side = max(2, int(math.ceil(math.sqrt(n_int))))
        left = c.real - (self.nu_left if not math.isinf(self.nu_left) else self.r + 1.0)
        for re in np.linspace(left, right, side):
            for im in np.linspace(-height, height, side):
                pts.append(complex(re, im))
        return [p for p in pts if self.contains(p)]


def vert_n(n, rho):
    """``Vert_n(ρ)``: unit-width strip around ``n`` minus the disc ``D_n(ρ)``."""
    return VertRegion(complex(n), rho, math.inf if n == 0 else 0.5, 0.5)


def in_vert_n(lam, n, rho):
    return vert_n(n, rho).contains(lam)
