"""Eigenvalues of the truncated Lax operator by two independent routes.

``dense_spectrum`` runs Hessenberg + shifted QR on the full Galerkin matrix;
``contour_eigen`` integrates the resolvent trace around a disc. Both return
indices labeled by localization discs rather than by sorting whenever discs
are supplied.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from ._backend import thread_budget
from .errors import (
    ContourThroughSpectrum,
    DiscAssignmentConflict,
    NonIntegerTrace,
    NumericalFailure,
    SingularResolvent,
)
from .fourier import SobolevParams
from .laxop import LaxMatrix, VertRegion
from .report import CertReport

DEFAULT_M = 64
MAX_M = 1024
CONTOUR_TOL = 1e-9
INTEGER_GUARD = 1e-3
NEAR_ZERO_RADIUS = 1.0 / 3.0


def auto_K(n_max, band):
    """Default truncation ``n_max + 8 B + 32``."""
    return int(n_max) + 8 * int(band) + 32


def _default_n_max(K, band):
    return min(K - 1, max(K - 8 * band - 32, K // 2))


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    discs: list
    method: str
    K: int
    residuals: np.ndarray
    potential_digest: str = ""
    nodes: Optional[int] = None
    all_eigenvalues: Optional[np.ndarray] = field(default=None, repr=False)
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_max(self):
        return len(self.eigenvalues) - 1

    def __getitem__(self, n):
        return complex(self.eigenvalues[n])

    def gaps(self):
        ev = self.eigenvalues
        return ev[1:] - ev[:-1] - 1.0

    def truncated(self, n_max):
        vecs = None if self.eigenvectors is None else self.eigenvectors[:, : n_max + 1]
        return SpectrumResult(
            self.eigenvalues[: n_max + 1], self.discs[: n_max + 1], self.method, self.K,
            self.residuals[: n_max + 1], self.potential_digest, self.nodes,
            self.all_eigenvalues, vecs,
        )


@dataclass
class GapSequence:
    """``gamma[n-1] = γ_n`` for ``n = 1..N``."""

    gamma: np.ndarray
    s: float
    weighted_norm: float
    partial_sums: np.ndarray

    def __getitem__(self, n):
        if n < 1:
            raise IndexError("gaps are indexed from n=1")
        return complex(self.gamma[n - 1])

    def __len__(self):
        return len(self.gamma)

    @property
    def indices(self):
        return np.arange(1, len(self.gamma) + 1)

    def l1_sum(self):
        return math.fsum(np.abs(self.gamma))


class ContourResult(NamedTuple):
    count: int
    eigenvalue: Optional[complex]
    trace: complex
    nodes: int
    converged: bool


# -- dense route -------------------------------------------------------------

def _inverse_iteration(mat, lam, norm1, iters=3, seed=0):
    K = mat.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(K) + 1j * rng.standard_normal(K)
    v /= np.linalg.norm(v)
    # offset the shift slightly so an exact eigenvalue does not give a zero pivot
    delta = 1e-10 * max(1.0, norm1) * (1 + 1j) / math.sqrt(2)
    lu, piv, _ = kernels.lu_factor(mat - (lam + delta) * np.eye(K))
    with np.errstate(all="ignore"):
        for _ in range(iters):
            w = kernels.lu_solve(lu, piv, v)
            nrm = np.linalg.norm(w)
            if not np.isfinite(nrm) or nrm == 0:
                break
            v = w / nrm
    res = float(np.linalg.norm(mat @ v - lam * v))
    return v, res


def _label_by_discs(ev, discs):
    labels = []
    for n, (c, r) in enumerate(discs):
        inside = np.flatnonzero(np.abs(ev - c) < r)
        if len(inside) != 1:
            raise DiscAssignmentConflict(
                f"disc {n} (center {complex(c):.6g}, radius {r:.4g}) holds {len(inside)} eigenvalues"
            )
        labels.append(int(inside[0]))
    if len(set(labels)) != len(labels):
        raise DiscAssignmentConflict("one eigenvalue is claimed by two discs")
    return labels


def self_discs(ev, rho=0.25):
    """Localization discs ``D_{τ_n}(|γ_n|/2 + ρ)`` built from a labeled sequence."""
    ev = np.asarray(ev, dtype=np.complex128)
    discs = [(complex(ev[0]), rho)]
    for n in range(1, len(ev)):
        g = ev[n] - ev[n - 1] - 1.0
        discs.append((complex(ev[n] - g / 2), abs(g) / 2 + rho))
    return discs


def dense_spectrum(L, n_max=None, discs=None, vectors=True, rho=0.25):
    """All eigenvalues of the truncation; the lowest ``n_max + 1`` are labeled.

    With ``discs`` (a list of ``(center, radius)``), index ``n`` is the unique
    eigenvalue inside disc ``n``. Without, eigenvalues are ordered by real
    part and each gets its self-consistent localization disc.
    """
    B = L.potential.band
    if discs is not None:
        n_max = len(discs) - 1
    elif n_max is None:
        n_max = _default_n_max(L.K, B)
    if n_max > L.K - 1:
        raise ValueError(f"n_max={n_max} exceeds K-1={L.K - 1}")
    ev = kernels.qr_eigvals(L.matrix)
    if discs is not None:
        idx = _label_by_discs(ev, discs)
        used = [(complex(c), float(r)) for c, r in discs]
    else:
        order = np.lexsort((ev.imag, ev.real))
        idx = [int(i) for i in order[: n_max + 1]]
        used = self_discs(ev[idx], rho)
    lam = ev[idx].astype(np.complex128)
    vecs = np.zeros((L.K, len(idx)), dtype=np.complex128) if vectors else None
    res = np.zeros(len(idx))
    for j, l in enumerate(lam):
        v, res[j] = _inverse_iteration(L.matrix, l, L.norm1)
        if vectors:
            vecs[:, j] = v
    return SpectrumResult(lam, used, "dense", L.K, res, L.potential.digest(),
                          None, ev, vecs)


# -- contour route -----------------------------------------------------------

def _pmap(fn, items, threads=None):
    threads = thread_budget() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


def contour_quadrature(fn, center, radius, M=DEFAULT_M, adaptive=True, tol=CONTOUR_TOL,
                       M_max=MAX_M, monitor=None):
    """Trapezoid approximation of ``(1/2πi) ∮ fn(λ) dλ`` on a circle.

    With ``adaptive`` the node count doubles (reusing old nodes) until the
    monitored scalar changes by less than ``tol``. Returns
    ``(value, nodes, converged)``.
    """
    if M < 8 or M % 8:
        raise ValueError("M must be a positive multiple of 8")
    c = complex(center)
    monitor = monitor or (lambda v: np.ravel(v)[:1])

    def weighted(theta):
        z = radius * np.exp(1j * theta)
        return np.asarray(fn(c + z)) * z

    theta = 2 * np.pi * np.arange(M) / M
    acc = sum(weighted(t) for t in theta)
    val = acc / M
    if not adaptive:
        return val, M, True
    while M < M_max:
        theta = 2 * np.pi * (2 * np.arange(M) + 1) / (2 * M)
        acc = acc + sum(weighted(t) for t in theta)
        M *= 2
        new = acc / M
        change = np.max(np.abs(monitor(new) - monitor(val)))
        scale = max(1.0, float(np.max(np.abs(monitor(new)))))
        val = new
        if change < tol * scale:
            return val, M, True
    return val, M, False


def _resolvent_for(u, K, L):
    if L is None:
        if K is None:
            raise ValueError("pass K or a prebuilt LaxMatrix")
        L = LaxMatrix(u, K)
    return L, L.resolvent()


def _round_trace(tr):
    count = int(round(tr.real))
    if abs(tr - count) > INTEGER_GUARD:
        raise NonIntegerTrace(f"projector trace {tr:.6g} is not near an integer")
    return count


def contour_eigen(u, disc, K=None, M=DEFAULT_M, L=None, adaptive=True):
    """Eigenvalue count in a disc and, if it is one, the eigenvalue itself.

    ``count = round(Tr P)`` with ``P = -(1/2πi) ∮ R(λ) dλ`` and
    ``λ = -Tr (1/2πi) ∮ λ R(λ) dλ``.
    """
    L, R = _resolvent_for(u, K, L)
    center, radius = disc

    def integrand(lam):
        try:
            tr = np.trace(R.inverse(lam))
        except SingularResolvent as exc:
            raise ContourThroughSpectrum(str(exc)) from exc
        return np.array([tr, lam * tr])

    val, nodes, ok = contour_quadrature(
        integrand, center, radius, M, adaptive, monitor=lambda v: v
    )
    tr = -complex(val[0])
    count = _round_trace(tr)
    eig = -complex(val[1]) if count == 1 else None
    return ContourResult(count, eig, tr, nodes, ok)


def contour_spectrum(u, discs, K=None, M=DEFAULT_M, L=None, adaptive=True, threads=None):
    """Labeled eigenvalues, one contour integral per disc (parallel over discs)."""
    L, _ = _resolvent_for(u, K, L)
    results = _pmap(lambda d: contour_eigen(u, d, M=M, L=L, adaptive=adaptive), list(discs),
                    threads)
    bad = [n for n, r in enumerate(results) if r.count != 1]
    if bad:
        raise DiscAssignmentConflict(
            f"disc {bad[0]} holds {results[bad[0]].count} eigenvalues"
        )
    lam = np.array([r.eigenvalue for r in results], dtype=np.complex128)
    # contour residual: deviation of the projector trace from one
    res = np.array([abs(r.trace - 1) for r in results])
    return SpectrumResult(lam, [(complex(c), float(r)) for c, r in discs], "contour", L.K,
                          res, u.digest(), max(r.nodes for r in results))


def riesz_projector(u, disc, K=None, M=DEFAULT_M, L=None, adaptive=True):
    """Dense ``P = -(1/2πi) ∮ R(λ) dλ`` over the circle ``disc``."""
    L, R = _resolvent_for(u, K, L)
    center, radius = disc

    def integrand(lam):
        try:
            return R.inverse(lam)
        except SingularResolvent as exc:
            raise ContourThroughSpectrum(str(exc)) from exc

    val, _, _ = contour_quadrature(
        integrand, center, radius, M, adaptive, monitor=lambda v: np.array([np.trace(v)])
    )
    P = -val
    _round_trace(complex(np.trace(P)))
    return P


def projector_defect(P):
    """``||P^2 - P||`` in the spectral norm."""
    return float(np.linalg.norm(P @ P - P, 2))


def near_zero_discs(n_max, radius=NEAR_ZERO_RADIUS):
    return [(complex(n), radius) for n in range(n_max + 1)]


# -- gaps and identities -----------------------------------------------------

def gaps_and_moment_map(spec, params=None):
    """Gap lengths ``γ_n = λ_n - λ_{n-1} - 1`` and ``Σ n^{1-2s} |γ_n|``."""
    if params is None:
        params = SobolevParams()
    elif isinstance(params, (int, float)):
        params = SobolevParams(float(params))
    if len(spec.eigenvalues) < 2:
        raise ValueError("need at least two eigenvalues")
    gamma = np.asarray(spec.gaps(), dtype=np.complex128)
    n = np.arange(1, len(gamma) + 1, dtype=float)
    terms = n ** (1 - 2 * params.s) * np.abs(gamma)
    partial = np.array([math.fsum(terms[: j + 1]) for j in range(len(terms))])
    return GapSequence(gamma, params.s, float(partial[-1]), partial)


class IdentityResiduals(NamedTuple):
    trace: np.ndarray
    tail_bound: float
    tail_model: str
    action: Optional[float]
    action_tail: Optional[float]
    action_lhs: Optional[complex]
    action_rhs: Optional[complex]


def _tail_estimate(gamma, floor=1e-13):
    """Geometric extrapolation of ``|γ_k|`` over the last five available k.

    Returns ``(tail of Σ|γ_k|, tail of Σ k|γ_k|, model)``.
    """
    N = len(gamma)
    g = np.abs(gamma[-5:])
    if N == 0 or not np.any(g):
        return 0.0, 0.0, "zero"
    if g.max() <= floor * max(1, N):
        # rounding-level gaps: no decay to fit, charge the window itself
        s = float(g.sum())
        return s, N * s, "floor"
    pos = g > 0
    k = np.arange(N - len(g) + 1, N + 1)[pos]
    slope = np.polyfit(k, np.log(g[pos]), 1)[0] if pos.sum() >= 2 else 0.0
    r = math.exp(slope)
    if r >= 1:
        return math.inf, math.inf, "no-decay"
    last = float(g[-1])
    t1 = last * r / (1 - r)
    t2 = last * (N * r / (1 - r) + r / (1 - r) ** 2)
    return t1, t2, "geometric"


def identity_residuals(spec, gaps, u, s=0.0):
    """Residuals of the trace formula per ``n`` and of the action identity.

    ``trace[n] = |λ_n - n + Σ_{n<k<=N} γ_k|`` over the available gaps; the
    extrapolated tail ``|Σ_{k>N} γ_k|`` is reported in ``tail_bound``. The
    action residual ``|Σ uhat(k) uhat(-k) - 2 Σ k γ_k|`` is only formed for
    ``s = 0``.
    """
    lam = np.asarray(spec.eigenvalues, dtype=np.complex128)
    gamma = np.asarray(gaps.gamma, dtype=np.complex128)
    N = len(gamma)
    # suffix sums Σ_{k>n} γ_k
    suffix = np.zeros(N + 1, dtype=np.complex128)
    for n in range(N - 1, -1, -1):
        suffix[n] = suffix[n + 1] + gamma[n]
    trace = np.abs(lam[: N + 1] - np.arange(N + 1) + suffix)
    t1, t2, model = _tail_estimate(gamma)
    if s != 0:
        return IdentityResiduals(trace, t1, model, None, None, None, None)
    lhs = u.mean_square()
    rhs = 2 * complex(np.sum(np.arange(1, N + 1) * gamma))
    return IdentityResiduals(trace, t1, model, abs(lhs - rhs), t2, lhs, rhs)


# -- counting certificate ----------------------------------------------------

def counting_regions(w_spec, rho=0.25, n_max=None):
    """Discs ``D_{τ_n}(r_n + ρ)`` and separators ``Vert_{τ_n}(r_n+ρ; ν_n, ν_{n+1})``.

    ``w_spec`` must hold at least ``n_max + 2`` eigenvalues of the reference
    potential so the last separator has a right neighbour.
    """
    lam = np.asarray(w_spec.eigenvalues, dtype=np.complex128)
    if n_max is None:
        n_max = len(lam) - 2
    if len(lam) < n_max + 2:
        raise ValueError("reference spectrum too short for the requested n_max")
    tau = np.empty(n_max + 2, dtype=np.complex128)
    r = np.zeros(n_max + 2)
    tau[0] = lam[0]
    for n in range(1, n_max + 2):
        g = lam[n] - lam[n - 1] - 1
        tau[n] = lam[n] - g / 2
        # collapsed gaps get r_n = 0
        r[n] = abs(g) / 2 if abs(g) >= 1e-10 else 0.0
    nu = np.empty(n_max + 2)
    nu[0] = math.inf
    nu[1:] = (tau[1:].real - tau[:-1].real) / 2
    discs = [(complex(tau[n]), float(r[n] + rho)) for n in range(n_max + 1)]
    seps = [VertRegion(complex(tau[n]), float(r[n] + rho), float(nu[n]), float(nu[n + 1]))
            for n in range(n_max + 1)]
    return discs, seps


def counting_certificate(u, w, rho=0.25, n_max=12, K=None, M=DEFAULT_M, samples=24,
                         bound_factor=1e6, threads=None, strict=False):
    """Check one eigenvalue of ``L_u`` per disc ``D_{τ_n}(r_n + ρ)``, ``n <= n_max``.

    Discs come from the spectrum of the real reference potential ``w``.
    Each sampled point of the separators must give a resolvent solve with
    ``||x|| <= bound_factor ||1||``.
    """
    if not w.is_real():
        raise ValueError("reference potential w must be real valued")
    if K is None:
        K = auto_K(n_max + 1, max(u.band, w.band))
    Lw = LaxMatrix(w, K)
    w_spec = dense_spectrum(Lw, n_max=n_max + 1, vectors=False)
    discs, seps = counting_regions(w_spec, rho, n_max)
    L = LaxMatrix(u, K)
    R = L.resolvent()
    one = np.zeros(K, dtype=np.complex128)
    one[0] = 1.0

    def check(n):
        try:
            cnt = contour_eigen(u, discs[n], M=M, L=L, adaptive=False).count
        except NumericalFailure:
            cnt = -1
        worst = 0.0
        bad_pts = []
        pts = seps[n].sample(samples)
        for lam in pts:
            try:
                nx = float(np.linalg.norm(R.solve(lam, one)))
            except SingularResolvent:
                nx = math.inf
            worst = max(worst, nx)
            if nx > bound_factor:
                bad_pts.append(lam)
        return cnt, worst, bad_pts, len(pts)

    out = _pmap(check, list(range(n_max + 1)), threads)
    offending = []
    margins = []
    total = 0
    for n, (cnt, worst, bad_pts, npts) in enumerate(out):
        total += npts + 1
        margins.append(0.0 if cnt == 1 else -1.0)
        if cnt != 1:
            offending.append((n, "count", cnt))
        for lam in bad_pts:
            offending.append((n, "separator", complex(lam)))
    rep = CertReport(
        name="counting",
        params={"rho": rho, "n_max": n_max, "K": K, "M": M},
        margins=margins,
        bound=0.0,
        passed=not offending,
        samples=total,
        offending=offending,
        notes={
            "counts": [c for c, *_ in out],
            "max_separator_solution_norm": max(x[1] for x in out),
            "discs": [(c.real, c.imag, r) for c, r in discs],
        },
    )
    return rep.check() if strict else rep
