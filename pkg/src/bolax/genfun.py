"""Generating function ``H_λ = <(L_u - λ)^{-1} 1 | 1>`` and the invariants built on it.

Every quantity has two independent evaluation routes; :func:`spectral_functionals`
tabulates both and flags entries where they disagree.
"""

import math
import threading
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import (
    ContourThroughSpectrum,
    GapTooSmallWarning,
    MethodUnavailable,
    NonIntegerTrace,
    SingularResolvent,
)
from .laxop import LaxMatrix, unit_vector, vert_n
from .spectrum import (
    DEFAULT_M,
    INTEGER_GUARD,
    _default_n_max,
    _tail_estimate,
    auto_K,
    contour_quadrature,
    dense_spectrum,
    riesz_projector,
)

DISAGREE_TOL = 1e-6
ETA_BOUND = 5 * 7 * 4


class SpectralData:
    """Truncation, resolvent and labeled dense spectrum of one potential, built lazily."""

    def __init__(self, u, K=None, n_max=None, M=DEFAULT_M):
        self.u = u
        n_req = 16 if n_max is None else int(n_max)
        self.K = int(K) if K is not None else auto_K(n_req, u.band)
        self.n_max = max(n_req, _default_n_max(self.K, u.band))
        self.n_max = min(self.n_max, self.K - 1)
        self.M = M
        self.L = LaxMatrix(u, self.K)
        self.R = self.L.resolvent()
        self.e0 = unit_vector(self.K)
        self._spec = None
        self._lock = threading.Lock()

    @property
    def spectrum(self):
        with self._lock:
            if self._spec is None:
                self._spec = dense_spectrum(self.L, n_max=self.n_max)
            return self._spec

    @property
    def lam(self):
        return self.spectrum.eigenvalues

    @property
    def gamma(self):
        """``gamma[p] = γ_p`` for ``p >= 1``; ``gamma[0]`` is unused (0)."""
        g = np.zeros(len(self.lam), dtype=np.complex128)
        g[1:] = self.spectrum.gaps()
        return g

    def disc(self, n):
        """``D_n(1/3)`` when ``λ_n`` and ``λ_{n-1}+1`` sit near ``n``, else the counting disc."""
        lam = self.lam
        near = abs(lam[n] - n) < 0.25 and (n == 0 or abs(lam[n - 1] + 1 - n) < 0.25)
        if near:
            return (complex(n), 1.0 / 3.0)
        return self.spectrum.discs[n]

    def H(self, lam):
        return complex(self.R.solve(lam, self.e0)[0])

    def H_and_derivative(self, lam):
        x = self.R.solve(lam, self.e0)
        y = self.R.solve(lam, x)
        return complex(x[0]), complex(y[0])


def _ctx(u, K, ctx, n=None):
    if ctx is not None:
        return ctx
    return SpectralData(u, K, n_max=None if n is None else max(16, n + 8))


def _contour(ctx, n, fn, adaptive=True):
    c, r = ctx.disc(n)

    def guarded(lam):
        try:
            return fn(lam)
        except SingularResolvent as exc:
            raise ContourThroughSpectrum(str(exc)) from exc

    val, _, _ = contour_quadrature(guarded, c, r, ctx.M, adaptive, monitor=lambda v: np.ravel(v))
    return val


# -- H -----------------------------------------------------------------------

def product_tail(ctx, lam):
    """Bound on ``|∏_{p>N}(...) - 1|`` from the extrapolated gap tail."""
    g = ctx.gamma[1:]
    t1, _, _ = _tail_estimate(g)
    N = len(g)
    d = (N + 1) - abs(complex(lam))
    if d <= 0 or math.isinf(t1):
        return math.inf
    return math.expm1(t1 / d)


def H_product(ctx, lam):
    lam = complex(lam)
    ev, g = ctx.lam, ctx.gamma
    p = np.arange(1, len(ev))
    return complex(np.prod(1 - g[p] / (ev[p] - lam)) / (ev[0] - lam))


def evaluate_H(u, lam, K=None, method="resolvent", ctx=None):
    """``H_λ`` via a resolvent solve or the product over the computed spectrum."""
    ctx = _ctx(u, K, ctx)
    if method == "resolvent":
        return ctx.H(lam)
    if method == "product":
        return H_product(ctx, lam)
    raise ValueError(f"unknown method {method!r}")


def partial_fraction(ctx, lam, F):
    """``Σ_n F_n/(λ - λ_n)`` over the given residues."""
    ev = ctx.lam[: len(F)]
    return complex(np.sum(np.asarray(F) / (complex(lam) - ev)))


# -- residues F_n ------------------------------------------------------------

def _require_real(u, what):
    if not u.is_real(tol=0.0):
        raise MethodUnavailable(f"{what} needs a real potential")


def residue_F(u, n, method="contour", K=None, ctx=None):
    """``F_n``: contour of ``H``, ``-<P_n 1|1>``, or ``-|<1|f_n>|^2`` (real ``u``)."""
    ctx = _ctx(u, K, ctx, n)
    if method == "contour":
        return complex(_contour(ctx, n, ctx.H))
    if method == "projector":
        P = riesz_projector(u, ctx.disc(n), M=ctx.M, L=ctx.L)
        return -complex(P[0, 0])
    if method == "eigenvector":
        _require_real(u, "eigenvector method")
        v = ctx.spectrum.eigenvectors[:, n]
        return -complex(abs(v[0]) ** 2 / np.vdot(v, v).real)
    raise ValueError(f"unknown method {method!r}")


# -- η_n and κ_n -------------------------------------------------------------

def eta(ctx, n, lam):
    """``η_n(λ)`` straight from its definition (singular at ``λ_n``, ``λ_{n-1}+1``)."""
    lam = complex(lam)
    ev = ctx.lam
    base = -(lam - ev[0]) * ctx.H(lam)
    if n == 0:
        return base
    return (lam - ev[n]) / (lam - ev[n - 1] - 1) * base


def eta_cauchy(ctx, n, z):
    """``η_n(z)`` inside the disc by Cauchy's formula on its boundary circle."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    val = _contour(ctx, n, lambda lam: eta(ctx, n, lam) / (lam - z))
    return val


def kappa(u, n, method="product", K=None, ctx=None):
    """Scaling factor ``κ_n`` via the ``η_n`` Cauchy integral or the gap product."""
    ctx = _ctx(u, K, ctx, n)
    ev, g = ctx.lam, ctx.gamma
    if method == "eta":
        val = complex(eta_cauchy(ctx, n, ev[n])[0])
        return val if n == 0 else val / (ev[n] - ev[0])
    if method == "product":
        p = np.array([k for k in range(1, len(ev)) if k != n])
        prod = complex(np.prod(1 - g[p] / (ev[p] - ev[n])))
        return prod if n == 0 else prod / (ev[n] - ev[0])
    raise ValueError(f"unknown method {method!r}")


# -- μ_n ---------------------------------------------------------------------

def mu(u, n, method="product", K=None, ctx=None):
    """Normalizer ``μ_n`` (``n >= 1``) via the product formula or eigenfunction inner products."""
    if n < 1:
        raise ValueError("μ_n is defined for n >= 1")
    ctx = _ctx(u, K, ctx, n)
    ev, g = ctx.lam, ctx.gamma
    if method == "product":
        first = 1 - g[n] / (ev[n] - ev[0])
        p = np.array([k for k in range(1, len(ev)) if k != n])
        rest = 1 - g[n] * g[p] / ((ev[p - 1] - ev[n - 1]) * (ev[p] - ev[n]))
        return complex(first * np.prod(rest))
    if method == "innerproduct":
        _require_real(u, "inner-product method")
        from .finitegap import normalize_phases, shift_pairing

        f = normalize_phases(ctx.spectrum.eigenvectors[:, : n + 1])
        return complex(shift_pairing(f, n) ** 2)
    raise ValueError(f"unknown method {method!r}")


# -- argument principle and η check -----------------------------------------

def zeros_minus_poles(u, n, K=None, ctx=None):
    """``(1/2πi) ∮ H'/H`` over the disc of index ``n``, rounded to an integer."""
    ctx = _ctx(u, K, ctx, n)

    def logderiv(lam):
        h, dh = ctx.H_and_derivative(lam)
        return dh / h

    val = complex(_contour(ctx, n, logderiv))
    zp = int(round(val.real))
    if abs(val - zp) > INTEGER_GUARD:
        raise NonIntegerTrace(f"argument-principle integral {val:.6g} is not near an integer")
    return zp


class EtaCheck(NamedTuple):
    points: np.ndarray
    values: np.ndarray
    inside: np.ndarray
    zero_residual: Optional[float]


def eta_and_zero_check(u, n, grid=None, K=None, ctx=None, count=40):
    """``η_n`` on ``Vert_n(1/4)`` (direct) and inside ``D_n(1/4)`` (Cauchy integral).

    ``zero_residual`` is ``|H(λ_{n-1}+1)|`` when ``γ_n != 0``, else ``None``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ctx = _ctx(u, K, ctx, n)
    if grid is None:
        outer = vert_n(n, 0.25).sample(count)
        rr = np.array([0.0, 0.08, 0.16, 0.2499])
        th = 2 * np.pi * np.arange(8) / 8
        inner = [n + r * np.exp(1j * t) for r in rr[1:] for t in th] + [complex(n)]
        grid = list(outer) + inner
    pts = np.asarray(grid, dtype=np.complex128)
    inside = np.abs(pts - n) < 0.25
    vals = np.empty(len(pts), dtype=np.complex128)
    if inside.any():
        vals[inside] = eta_cauchy(ctx, n, pts[inside])
    for j in np.flatnonzero(~inside):
        vals[j] = eta(ctx, n, pts[j])
    g = ctx.gamma[n]
    zres = None
    if abs(g) > 1e-12:
        zres = abs(ctx.H(ctx.lam[n - 1] + 1))
    return EtaCheck(pts, vals, inside, zres)


# -- tables ------------------------------------------------------------------

@dataclass
class SpectralFunctionals:
    """Per-index values by method; ``flags[name][n]`` marks disagreement above 1e-6."""

    n: np.ndarray
    values: dict
    discrepancy: dict
    flags: dict
    gamma: np.ndarray
    F_kappa_gamma: np.ndarray
    notes: dict = field(default_factory=dict)

    def best(self, name):
        """First available method's values for ``name``."""
        methods = self.values[name]
        return next(iter(methods.values()))


def _pair(values):
    keys = list(values)
    if len(keys) < 2:
        return np.zeros(len(values[keys[0]]))
    a, b = values[keys[0]], values[keys[1]]
    d = np.abs(np.asarray(a) - np.asarray(b))
    if len(keys) > 2:
        for k in keys[2:]:
            d = np.maximum(d, np.abs(np.asarray(values[k]) - np.asarray(a)))
    return d


def spectral_functionals(u, n_max, K=None, ctx=None, F_methods=None):
    """Tables of ``F_n``, ``κ_n`` (n >= 0) and ``μ_n`` (n >= 1) by every applicable method."""
    ctx = ctx or SpectralData(u, K, n_max=n_max + 8)
    real = u.is_real()
    if F_methods is None:
        F_methods = ["contour", "projector"] + (["eigenvector"] if real else [])
    ns = np.arange(n_max + 1)
    vals = {"F": {}, "kappa": {}, "mu": {}}
    for m in F_methods:
        vals["F"][m] = np.array([residue_F(u, n, m, ctx=ctx) for n in ns])
    for m in ("product", "eta"):
        vals["kappa"][m] = np.array([kappa(u, n, m, ctx=ctx) for n in ns])
    mu_methods = ["product"] + (["innerproduct"] if real else [])
    for m in mu_methods:
        vals["mu"][m] = np.array([np.nan] + [mu(u, n, m, ctx=ctx) for n in ns[1:]])
    disc = {k: _pair(v) for k, v in vals.items()}
    flags = {k: np.nan_to_num(d) > DISAGREE_TOL for k, d in disc.items()}
    gamma = ctx.gamma[: n_max + 1]
    F = vals["F"]["contour"]
    kap = vals["kappa"]["product"]
    resid = np.full(n_max + 1, np.nan)
    skipped = []
    for n in ns[1:]:
        if abs(gamma[n]) >= 1e-12:
            resid[n] = abs(F[n] + kap[n] * gamma[n])
        else:
            skipped.append(int(n))
    if skipped:
        warnings.warn(
            f"|γ_n| < 1e-12 for n in {skipped}: F_n = -κ_n γ_n check skipped there",
            GapTooSmallWarning, stacklevel=2,
        )
    return SpectralFunctionals(ns, vals, disc, flags, gamma, resid,
                               {"K": ctx.K, "M": ctx.M, "digest": u.digest()})
