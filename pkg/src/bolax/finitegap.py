"""Finite-gap potentials from root data, ``g_∞ = e^{D^{-1}u}`` and normalized eigenfunctions.

A finite-gap potential is fixed by roots ``q_j`` in the punctured unit disc
through ``Πu = -e^{ix} Q'(e^{ix})/Q(e^{ix})``, ``Q(z) = ∏(1 - q_j z)``,
which gives ``uhat(k) = Σ_j q_j^k`` for ``k >= 1``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import BandTooSmall, GridTooSmall, MethodUnavailable, PhaseDegenerate, RootOutOfDisc
from .fourier import FourierTable, Potential, SobolevParams, antiderivative, shift_forward
from .laxop import LaxMatrix
from .spectrum import auto_K, dense_spectrum

TAIL_TOL = 1e-12
PHASE_TOL = 1e-12


@dataclass(frozen=True)
class FiniteGapSpec:
    roots: tuple

    def __post_init__(self):
        roots = tuple(complex(q) for q in np.atleast_1d(self.roots))
        if not roots:
            raise ValueError("need at least one root")
        for q in roots:
            if not 0 < abs(q) < 1:
                raise RootOutOfDisc(f"root {q} must satisfy 0 < |q| < 1")
        object.__setattr__(self, "roots", roots)

    @property
    def N(self):
        return len(self.roots)

    def tail(self, band):
        """``Σ_j |q_j|^{B+1} / (1 - |q_j|)``: size of the dropped series terms."""
        return math.fsum(abs(q) ** (band + 1) / (1 - abs(q)) for q in self.roots)

    def min_band(self, tol=TAIL_TOL):
        B = 1
        while self.tail(B) >= tol:
            B += 1
        return B

    def Q(self, z):
        z = np.asarray(z, dtype=np.complex128)
        out = np.ones_like(z)
        for q in self.roots:
            out = out * (1 - q * z)
        return out

    def dQ(self, z):
        z = np.asarray(z, dtype=np.complex128)
        total = np.zeros_like(z)
        for j, qj in enumerate(self.roots):
            term = -qj * np.ones_like(z)
            for i, qi in enumerate(self.roots):
                if i != j:
                    term = term * (1 - qi * z)
            total = total + term
        return total


def _as_spec(spec):
    return spec if isinstance(spec, FiniteGapSpec) else FiniteGapSpec(tuple(np.atleast_1d(spec)))


def potential_from_roots(spec, band, tol=TAIL_TOL):
    """Real potential with ``uhat(k) = Σ_j q_j^k`` for ``1 <= k <= band``."""
    spec = _as_spec(spec)
    t = spec.tail(band)
    if t >= tol:
        raise BandTooSmall(
            f"band {band} leaves a series tail of {t:.3g}; need at least {spec.min_band(tol)}"
        )
    q = np.array(spec.roots)
    coeffs = {k: complex(np.sum(q ** k)) for k in range(1, band + 1)}
    return Potential(band, coeffs, hermitian=True)


def projected_potential_on_grid(spec, x):
    """``Πu(x) = -e^{ix} Q'(e^{ix}) / Q(e^{ix})`` evaluated pointwise."""
    spec = _as_spec(spec)
    z = np.exp(1j * np.asarray(x, dtype=float))
    return -z * spec.dQ(z) / spec.Q(z)


def g_infinity_closed_form(spec, x):
    """``conj(Q(e^{ix})) / Q(e^{ix})``."""
    spec = _as_spec(spec)
    qz = spec.Q(np.exp(1j * np.asarray(x, dtype=float)))
    return np.conj(qz) / qz


def _grid_size(band, out_band):
    need = 4 * (band + out_band)
    return 1 << max(3, (need - 1).bit_length())


def _g_inf_once(u, G, W, top, tol):
    B = u.band
    if G is None:
        G = _grid_size(B, W)
    if G < 2 * W + 1 or G < 2 * B + 1:
        raise GridTooSmall(f"grid of {G} points cannot resolve output band {W}")
    d = antiderivative(u.table())
    spec = np.zeros(G, dtype=np.complex128)
    for k, c in zip(d.modes, d.values):
        spec[k % G] += c
    vals = np.exp(np.fft.ifft(spec) * G)
    coef = np.fft.fft(vals) / G
    out = coef[np.arange(-W, W + 1) % G]
    edge = np.concatenate([np.abs(out[:top]), np.abs(out[-top:])])
    return out, float(edge.max())


def g_infinity(u, G=None, out_band=None, top=2, tol=1e-12, max_band=4096):
    """Coefficients of ``e^{D^{-1}u}`` on modes ``-out_band..out_band``.

    ``D^{-1}u`` is sampled on ``G`` equispaced points, exponentiated, and
    transformed back with an FFT. Without an explicit ``out_band`` the band
    starts at ``max(32, 2B + 16)`` and doubles until the tail is resolved.
    Raises :class:`GridTooSmall` when the ``top`` outermost coefficients on
    either side still exceed ``tol``.
    """
    W = out_band if out_band is not None else max(32, 2 * u.band + 16)
    while True:
        out, edge = _g_inf_once(u, G, W, top, tol)
        if edge <= tol:
            return FourierTable(-W, out)
        if out_band is not None or G is not None or 2 * W > max_band:
            raise GridTooSmall(
                f"outer coefficients of g_inf reach {edge:.3g}; raise out_band or G"
            )
        W *= 2


# -- eigenfunctions ----------------------------------------------------------

def normalize_phases(vecs):
    """Unit columns with ``<1|f_0> > 0`` and ``<f_n|e^{ix} f_{n-1}> > 0``.

    The normalization is recursive in ``n``; each column is rotated by the
    conjugate phase of the relevant inner product.
    """
    f = np.array(vecs, dtype=np.complex128, copy=True)
    f /= np.linalg.norm(f, axis=0)[None, :]
    a = f[0, 0]
    if abs(a) < PHASE_TOL:
        raise PhaseDegenerate(f"|<1|f_0>| = {abs(a):.3g}: phase of f_0 undefined")
    f[:, 0] *= np.conj(a) / abs(a)
    for n in range(1, f.shape[1]):
        p = np.vdot(shift_forward(f[:, n - 1]), f[:, n])
        if abs(p) < PHASE_TOL:
            raise PhaseDegenerate(f"|<f_{n}|e^(ix) f_{n - 1}>| = {abs(p):.3g}: phase undefined")
        f[:, n] *= np.conj(p) / abs(p)
    return f


def shift_pairing(f, n):
    """``<f_n | e^{ix} f_{n-1}>`` for a column-stacked family."""
    return complex(np.vdot(shift_forward(f[:, n - 1]), f[:, n])).real


@dataclass
class EigenfunctionTable:
    eigenvalues: np.ndarray
    f: np.ndarray
    g_inf: Optional[FourierTable]
    K: int

    @property
    def n_max(self):
        return self.f.shape[1] - 1

    def g(self, n):
        """``g_n = e^{-inx} f_n`` as a two-sided table on ``[-n, K-1-n]``."""
        return FourierTable(-n, self.f[:, n])

    def pairing(self, n):
        return shift_pairing(self.f, n)


def _require_real(u):
    if not u.is_real():
        raise MethodUnavailable("normalized eigenfunctions are defined for real potentials only")


def normalized_eigenfunctions(u, n_max, K=None, with_g_inf=True):
    """Phase-normalized eigenvectors ``f_0..f_{n_max}`` of a real potential."""
    _require_real(u)
    K = K or auto_K(n_max, u.band)
    sp = dense_spectrum(LaxMatrix(u, K), n_max=n_max)
    f = normalize_phases(sp.eigenvectors)
    gi = g_infinity(u) if with_g_inf else None
    return EigenfunctionTable(sp.eigenvalues, f, gi, K)


def collinearity_defect(f, h):
    """``||f - <f|h> h||`` with ``h`` normalized."""
    h = np.asarray(h, dtype=np.complex128)
    h = h / np.linalg.norm(h)
    return float(np.linalg.norm(f - np.vdot(h, f) * h))


def hardy_from_table(t, K):
    """Modes ``0..K-1`` of a two-sided table."""
    return t.window(0, K - 1)


def _table_distance(a, b):
    lo, hi = min(a.lo, b.lo), max(a.hi, b.hi)
    return float(np.linalg.norm(a.window(lo, hi) - b.window(lo, hi)))


class ConvergenceTable(NamedTuple):
    n: np.ndarray
    dist_inf: np.ndarray
    step: np.ndarray
    sqrt_one_minus_mu: np.ndarray
    step_ok: np.ndarray
    fit_exponent: Optional[float]
    tau: float


def gn_convergence_table(u, n_max, K=None, s=0.0, table=None, tol=1e-9):
    """Rows ``(n, ||g_n - g_∞||, ||g_n - g_{n-1}||, sqrt(1 - μ_n))`` for ``n = 1..n_max``.

    ``μ_n`` comes from the gap product, independent of the eigenvectors. The
    exponent is a least-squares slope of ``log ||g_n - g_∞||`` against
    ``log n`` (``None`` when the distances sit at rounding level).
    """
    from .genfun import SpectralData, mu

    _require_real(u)
    if table is None:
        table = normalized_eigenfunctions(u, n_max, K)
    ctx = SpectralData(u, table.K, n_max=n_max + 16)
    ns = np.arange(1, n_max + 1)
    dinf = np.array([_table_distance(table.g(n), table.g_inf) for n in ns])
    step = np.array([_table_distance(table.g(n), table.g(n - 1)) for n in ns])
    mus = np.array([mu(u, n, "product", ctx=ctx).real for n in ns])
    root = np.sqrt(np.clip(1 - mus, 0, None))
    ok = step <= math.sqrt(2) * root + tol
    tau = SobolevParams(s).tau
    fit = None
    sel = dinf > 1e-10
    if sel.sum() >= 3:
        fit = float(np.polyfit(np.log(ns[sel]), np.log(dinf[sel]), 1)[0])
    return ConvergenceTable(ns, dinf, step, root, ok, fit, tau)


# -- structural identities ---------------------------------------------------

def shift_identity_residual(u, f, K=None):
    """Max over interior modes of ``L(Sf) - S(Lf) - Sf + <uSf|1> 1``."""
    f = np.asarray(f, dtype=np.complex128)
    K = K or len(f)
    L = LaxMatrix(u, K)
    Sf = shift_forward(f)
    pair = complex(np.sum(u.dense()[::-1][u.band:][: K] * Sf[: u.band + 1]))
    r = L.matrix @ Sf - shift_forward(L.matrix @ f) - Sf
    r[0] += pair
    interior = max(1, K - u.band - 2)
    return float(np.max(np.abs(r[:interior])))


class GapVanishing(NamedTuple):
    f_overlap: float
    shifted_pairing: float
    eigen_residual: float


def gap_vanishing_checks(u, table, n):
    """``|<f_n|1>|``, ``|<u S f_{n-1}|1>|`` and ``||L S f_{n-1} - λ_n S f_{n-1}||``."""
    f = table.f
    K = table.K
    Sf = shift_forward(f[:, n - 1])
    pair = complex(np.sum(u.dense()[::-1][u.band:][: K] * Sf[: u.band + 1]))
    L = LaxMatrix(u, K)
    res = np.linalg.norm(L.matrix @ Sf - table.eigenvalues[n] * Sf)
    return GapVanishing(abs(f[0, n]), abs(pair), float(res))


class FiniteGapReport(NamedTuple):
    N: int
    gamma: np.ndarray
    last_gap: complex
    last_gap_nonzero: bool
    max_gap_beyond: float
    max_shift_beyond: float


def finite_gap_report(spec, band, K=None, n_max=16, tol=1e-8):
    """Numerical check that only ``γ_1..γ_N`` are nonzero and that ``γ_N != 0``."""
    spec = _as_spec(spec)
    u = potential_from_roots(spec, band)
    K = K or auto_K(n_max, band)
    sp = dense_spectrum(LaxMatrix(u, K), n_max=n_max, vectors=False)
    gam = sp.gaps()
    N = spec.N
    beyond = np.abs(gam[N:]) if len(gam) > N else np.zeros(1)
    shift = np.abs(sp.eigenvalues[N:] - np.arange(N, n_max + 1))
    last = complex(gam[N - 1])
    return FiniteGapReport(N, gam, last, abs(last) > tol, float(beyond.max()), float(shift.max()))
