"""Fourier-side primitives on the torus.

Conventions: ``f(x) = sum_k fhat(k) e^{ikx}``; the L2 inner product is
``<f|g> = sum_k fhat(k) conj(ghat(k))``; ``<k> = max(1, |k|)``.

Hardy vectors (elements of the truncated Hardy space) are plain 1-D complex
arrays ``h`` with ``h[k] = fhat(k)`` for ``0 <= k < K``. Two-sided tables are
:class:`FourierTable` instances, potentials are :class:`Potential`.
"""

import hashlib
import math
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .errors import PotentialFormatError


@dataclass(frozen=True)
class SobolevParams:
    """Regularity index ``s`` in ``[0, 1/2)`` and its derived exponents."""

    s: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.s < 0.5):
            raise ValueError(f"s must lie in [0, 1/2), got {self.s}")

    @property
    def sigma(self):
        return (self.s + 0.5) / 2

    @property
    def tau(self):
        return (0.5 - self.s) / 2


class FourierTable:
    """Coefficients ``values[j]`` of the modes ``lo + j``."""

    __slots__ = ("lo", "values")

    def __init__(self, lo, values):
        self.lo = int(lo)
        self.values = np.asarray(values, dtype=np.complex128).copy()
        self.values.setflags(write=False)

    @classmethod
    def from_dict(cls, coeffs):
        if not coeffs:
            return cls(0, np.zeros(1))
        lo, hi = min(coeffs), max(coeffs)
        vals = np.zeros(hi - lo + 1, dtype=np.complex128)
        for k, c in coeffs.items():
            vals[k - lo] = c
        return cls(lo, vals)

    @classmethod
    def hardy(cls, h):
        return cls(0, h)

    @property
    def hi(self):
        return self.lo + len(self.values) - 1

    @property
    def modes(self):
        return np.arange(self.lo, self.hi + 1)

    def coeff(self, k):
        j = k - self.lo
        if 0 <= j < len(self.values):
            return complex(self.values[j])
        return 0j

    def window(self, lo, hi):
        """Dense coefficient array over ``lo..hi`` (zero padded / cropped)."""
        out = np.zeros(hi - lo + 1, dtype=np.complex128)
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a <= b:
            out[a - lo:b - lo + 1] = self.values[a - self.lo:b - self.lo + 1]
        return out

    def __add__(self, other):
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return FourierTable(lo, self.window(lo, hi) + other.window(lo, hi))

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, c):
        return FourierTable(self.lo, self.values * c)

    __rmul__ = __mul__

    def evaluate(self, x):
        """Pointwise values on the points ``x``."""
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.outer(x, self.modes)) @ self.values

    def l2_norm(self):
        return sobolev_norm(self, 0.0)

    def __repr__(self):
        return f"FourierTable(lo={self.lo}, hi={self.hi})"


class Potential:
    """Band-limited mean-zero potential ``u`` with ``uhat(k)`` for ``1 <= |k| <= band``.

    With ``hermitian=True`` only ``k >= 1`` is stored and ``uhat(-k)`` is the
    complex conjugate, i.e. ``u`` is real valued.
    """

    __slots__ = ("band", "hermitian", "_coeffs", "_dense")

    def __init__(self, band, coeffs=None, hermitian=False):
        band = int(band)
        if band < 0:
            raise PotentialFormatError(f"band must be nonnegative, got {band}")
        stored = {}
        for k, c in (coeffs or {}).items():
            k = int(k)
            if k == 0:
                raise PotentialFormatError("k=0 is not allowed: potentials have mean zero")
            if abs(k) > band:
                raise PotentialFormatError(f"mode k={k} exceeds band {band}")
            if hermitian and k < 0:
                raise PotentialFormatError(f"hermitian potential stores k>=1 only, got k={k}")
            stored[k] = complex(c)
        self.band = band
        self.hermitian = bool(hermitian)
        self._coeffs = MappingProxyType(dict(sorted(stored.items())))
        dense = np.zeros(2 * band + 1, dtype=np.complex128)
        for k, c in self._coeffs.items():
            dense[k + band] = c
            if self.hermitian:
                dense[band - k] = np.conj(c)
        dense.setflags(write=False)
        self._dense = dense

    @classmethod
    def zero(cls, band=0):
        return cls(band, {}, hermitian=True)

    @classmethod
    def from_dense(cls, values, band, hermitian=False):
        """Build from a two-sided array indexed ``k + band``."""
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (2 * band + 1,):
            raise PotentialFormatError("dense array must have length 2*band+1")
        if values[band] != 0:
            raise PotentialFormatError("dense array has nonzero mean")
        ks = range(1, band + 1) if hermitian else [k for k in range(-band, band + 1) if k]
        return cls(band, {k: values[k + band] for k in ks if values[k + band] != 0}, hermitian)

    @property
    def coeffs(self):
        return self._coeffs

    def coeff(self, k):
        if abs(k) > self.band:
            return 0j
        return complex(self._dense[k + self.band])

    def dense(self):
        """Two-sided coefficients indexed ``k + band``; read-only."""
        return self._dense

    def table(self):
        return FourierTable(-self.band, self._dense)

    def is_real(self, tol=0.0):
        if self.hermitian:
            return True
        d = self._dense
        return bool(np.all(np.abs(d - np.conj(d[::-1])) <= tol))

    def norm(self, sigma=0.0):
        return sobolev_norm(self.table(), sigma)

    def mean_square(self):
        """``(1/2pi) int u^2 dx = sum_{k != 0} uhat(k) uhat(-k)`` (bilinear, no conjugate)."""
        d = self._dense
        return complex(np.sum(d * d[::-1]))

    def reflect(self):
        """``u_*(x) = u(-x)``."""
        if self.hermitian:
            return Potential(self.band, {k: np.conj(c) for k, c in self._coeffs.items()}, True)
        return Potential(self.band, {-k: c for k, c in self._coeffs.items()}, False)

    def scaled(self, c):
        c = complex(c)
        if self.hermitian and c.imag == 0:
            return Potential(self.band, {k: v * c.real for k, v in self._coeffs.items()}, True)
        return Potential.from_dense(self._dense * c, self.band, hermitian=False)

    def __add__(self, other):
        band = max(self.band, other.band)
        herm = self.hermitian and other.hermitian
        total = self.table() + other.table()
        return Potential.from_dense(total.window(-band, band), band, hermitian=herm)

    def __eq__(self, other):
        if not isinstance(other, Potential):
            return NotImplemented
        return (
            self.band == other.band
            and self.hermitian == other.hermitian
            and dict(self._coeffs) == dict(other._coeffs)
        )

    def __hash__(self):
        return hash((self.band, self.hermitian, tuple(self._coeffs.items())))

    def digest(self):
        """Short content hash used to tag emitted results."""
        h = hashlib.sha256()
        h.update(f"{self.band}:{int(self.hermitian)}".encode())
        for k, c in self._coeffs.items():
            h.update(f";{k}:{c.real!r}:{c.imag!r}".encode())
        return h.hexdigest()[:16]

    def __repr__(self):
        return f"Potential(band={self.band}, hermitian={self.hermitian}, nnz={len(self._coeffs)})"


def _as_table(f):
    if isinstance(f, FourierTable):
        return f
    if isinstance(f, Potential):
        return f.table()
    return FourierTable(0, np.asarray(f, dtype=np.complex128))


def szego_project(f, K):
    """Keep the modes ``0..K-1`` of a two-sided table."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return _as_table(f).window(0, K - 1)


def multiply(u, f):
    """Exact product ``u f`` as a two-sided table on ``[-B, K-1+B]``."""
    ut = _as_table(u)
    ft = _as_table(f)
    return FourierTable(ut.lo + ft.lo, np.convolve(ut.values, ft.values))


def sobolev_norm(f, sigma, shift=None):
    """``||f||_sigma`` or, with ``shift=n``, the shifted norm ``||f||_{sigma;n}``.

    Weights are ``<k - n>^{2 sigma}``; the sum is accumulated with
    :func:`math.fsum`.
    """
    t = _as_table(f)
    k = t.modes
    if shift is not None:
        if shift < 0:
            raise ValueError("shift must be >= 0")
        k = k - shift
    w = np.maximum(1, np.abs(k)).astype(float) ** (2.0 * sigma)
    return math.sqrt(math.fsum(w * np.abs(t.values) ** 2))


def antiderivative(u):
    """``D^{-1} u``: coefficient ``uhat(k)/k`` for ``k != 0``."""
    t = _as_table(u)
    if t.coeff(0) != 0:
        raise PotentialFormatError("antiderivative requires a mean-zero input")
    k = t.modes
    vals = np.zeros_like(t.values)
    nz = k != 0
    vals[nz] = t.values[nz] / k[nz]
    return FourierTable(t.lo, vals)


def shift_forward(h):
    """``S h = e^{ix} h``; the top mode is dropped."""
    h = np.asarray(h, dtype=np.complex128)
    out = np.zeros_like(h)
    out[1:] = h[:-1]
    return out


def shift_adjoint(h):
    """``S* h``: modes move down one slot, ``h[0]`` is dropped."""
    h = np.asarray(h, dtype=np.complex128)
    out = np.zeros_like(h)
    out[:-1] = h[1:]
    return out


def inner(f, g):
    """``<f|g>`` for Hardy vectors of equal length."""
    return complex(np.vdot(g, f))
