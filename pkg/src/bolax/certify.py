"""Sampled checks of explicit resolvent, generating-function and κ/μ bounds.

Explicit constants are hard coded below. The multiplication constant ``C_s``
is not known in closed form and is replaced by the empirical maximum
:func:`estimate_Cs`, which every report records.
"""

import math
from typing import NamedTuple

import numpy as np

from .errors import SingularResolvent
from .fourier import FourierTable, SobolevParams, sobolev_norm
from .genfun import SpectralData, kappa, mu
from .laxop import LaxMatrix, vert_n, weighted_block_norm
from .report import CertReport
from .spectrum import _tail_estimate

KAPPA_BOUND = 7 / 12 * math.exp(1 / 3)
MU_FACTOR = 5 / 3 * math.exp(1 / 15)
MU_FACTOR_GENERAL = 7 / 6 * math.exp(1 / 3)
GAP_GATE = 0.2
H_LOWER, H_UPPER = 2 / 3, 4 / 3
ETA_C = 5 * 7 * 4
TOL = 1e-10

_CS_CACHE = {}


def _params(s):
    return s if isinstance(s, SobolevParams) else SobolevParams(float(s))


# -- multiplication constant -------------------------------------------------

def _random_table(rng, band, decay):
    k = np.arange(-band, band + 1)
    w = np.maximum(1, np.abs(k)).astype(float) ** (-decay)
    c = (rng.standard_normal(len(k)) + 1j * rng.standard_normal(len(k))) * w
    return FourierTable(-band, c)


def multiplication_ratios(s, trials, seed=0):
    """Per-sample ratios ``||fg||_s / (||f||_{1-σ} ||g||_s)`` and the dual ``-s`` form.

    Sample ``j`` depends only on ``seed`` and ``j``: the first sample is
    ``f = g = 1``, the rest draw random bands and decay rates.
    """
    p = _params(s)
    sig = p.sigma
    rng = np.random.default_rng(seed)
    out = np.empty((trials, 2))
    for j in range(trials):
        if j == 0:
            f = g = FourierTable(0, [1.0])
        else:
            bf, bg = rng.integers(0, 33, size=2)
            f = _random_table(rng, int(bf), rng.uniform(0.0, 2.0))
            g = _random_table(rng, int(bg), rng.uniform(-0.5, 2.0))
        prod = FourierTable(f.lo + g.lo, np.convolve(f.values, g.values))
        nf = sobolev_norm(f, 1 - sig)
        out[j, 0] = sobolev_norm(prod, p.s) / (nf * sobolev_norm(g, p.s))
        out[j, 1] = sobolev_norm(prod, -p.s) / (nf * sobolev_norm(g, -p.s))
    return out


def estimate_Cs(s, trials=200, seed=0):
    """Empirical ``Ĉ_s``: largest sampled multiplication ratio, clamped below by 1."""
    if trials < 100:
        raise ValueError("trials must be >= 100")
    key = (float(_params(s).s), int(trials), int(seed))
    if key not in _CS_CACHE:
        _CS_CACHE[key] = max(1.0, float(multiplication_ratios(s, trials, seed).max()))
    return _CS_CACHE[key]


def k_M(Cs, M, s):
    """``(2 C_s M)^{2/(1/2 - s)} + 1``."""
    return (2 * Cs * M) ** (2 / (0.5 - _params(s).s)) + 1


def empirical_radii(Cs):
    """Radii built from ``Ĉ_s``; only valid relative to the empirical constant."""
    return {"r_s": 1 / (16 * Cs), "contraction_radius_rho_1/4": 0.25 / (4 * Cs)}


# -- half planes -------------------------------------------------------------

def halfplane_points(KM, count=200):
    """Boundary-heavy samples of ``{Re λ <= -K_M}`` and the two diagonal half planes."""
    t = np.linspace(-1, 1, max(5, count // 8))
    ims = np.sign(t) * np.abs(t) ** 3 * 4 * KM
    pts = []
    for off in (0.0, 0.5, 2.0, KM):
        pts.extend(-KM - off + 1j * ims)
    mus = -KM + (np.linspace(0, 1, max(5, count // 8)) ** 2) * 6 * KM
    for lift in (0.0, 1.0, KM):
        pts.extend(mus + 1j * (mus + 2 * KM + lift))
        pts.extend(mus - 1j * (mus + 2 * KM + lift))
    return np.array(pts[:count] if len(pts) >= count else pts, dtype=np.complex128)


def halfplane_certificate(u, s=0.0, M=None, samples=200, Cs=None, K=None, strict=False):
    """Contraction ``||T_u (D-λ)^{-1}||_{-s}`` <= 1/2 left of ``-K_M``, <= √2/2 on the diagonals."""
    p = _params(s)
    norm = u.norm(-p.s)
    M = norm if M is None else M
    Cs = estimate_Cs(p.s) if Cs is None else Cs
    KM = k_M(Cs, M, p.s) if M > 0 else 1.0
    K = K or max(64, 2 * u.band + 32)
    params = {"s": p.s, "M": M, "K": K, "C_s_hat": Cs, "K_M": KM}
    if norm > M * (1 + 1e-12):
        rep = CertReport("halfplane", params, [], 0.5, False, 0, gate_failed=True,
                         notes={"norm": norm})
        return rep.check() if strict else rep
    pts = halfplane_points(KM, samples)
    L = LaxMatrix(u, K)
    R = L.resolvent()
    e0 = np.zeros(K, dtype=np.complex128)
    e0[0] = 1
    margins, offending = [], []
    for lam in pts:
        bound = 0.5 if lam.real <= -KM else math.sqrt(2) / 2
        val = weighted_block_norm(u, lam, None, p, K)
        try:
            R.solve(lam, e0)
            solved = True
        except SingularResolvent:
            solved = False
        m = bound - val
        margins.append(m)
        if m < -TOL or not solved:
            offending.append(complex(lam))
    rep = CertReport("halfplane", params, margins, 0.5, not offending, len(pts),
                     offending=offending, notes={"norm": norm})
    return rep.check() if strict else rep


# -- Vert regions ------------------------------------------------------------

def distance_margin(lam, n, rho, K):
    """``min_k |k - λ| - ρ<k - n>`` over ``0 <= k < K``."""
    k = np.arange(K)
    return float(np.min(np.abs(k - complex(lam)) - rho * np.maximum(1, np.abs(k - n))))


def region_bound_certificates(u, s=0.0, rho=0.25, n_range=range(0, 8), K=None,
                              samples_per_n=16, Cs=None, ctx=None, strict=False):
    """Per ``λ`` in ``Vert_n(ρ)``: distance inequality, 1/4 contraction, ``2/3 <= |λH| <= 4/3``."""
    p = _params(s)
    Cs = estimate_Cs(p.s) if Cs is None else Cs
    norm = u.norm(-p.s)
    n_range = list(n_range)
    K = K or max(64, max(n_range) + 8 * u.band + 32)
    params = {"s": p.s, "rho": rho, "n_range": [min(n_range), max(n_range)], "K": K,
              "C_s_hat": Cs}
    gate = norm <= rho / (4 * Cs)
    if not gate:
        rep = CertReport("region_bounds", params, [], 0.25, False, 0, gate_failed=True,
                         notes={"norm": norm, "gate": rho / (4 * Cs)})
        return rep.check() if strict else rep
    ctx = ctx or SpectralData(u, K, n_max=max(n_range) + 4)
    margins, offending = [], []
    parts = {"distance": [], "contraction": [], "H": []}
    total = 0
    for n in n_range:
        for lam in vert_n(n, rho).sample(samples_per_n):
            total += 1
            a = distance_margin(lam, n, rho, K)
            b = 0.25 - weighted_block_norm(u, lam, n, p, K)
            lh = abs(lam * ctx.H(lam))
            c = min(lh - H_LOWER, H_UPPER - lh)
            parts["distance"].append(a)
            parts["contraction"].append(b)
            parts["H"].append(c)
            m = min(a, b, c)
            margins.append(m)
            if m < -TOL:
                offending.append((n, complex(lam)))
    notes = {f"worst_{k}": min(v) for k, v in parts.items()}
    notes["norm"] = norm
    rep = CertReport("region_bounds", params, margins, 0.25, not offending, total,
                     offending=offending, notes=notes)
    return rep.check() if strict else rep


def h_bound_samples(u, n_range, rho=0.25, count=100, K=None, ctx=None):
    """``|λ H_λ|`` on ``count`` points spread over ``Vert_n(ρ)`` for ``n`` in ``n_range``."""
    n_range = list(n_range)
    per = max(4, -(-count // len(n_range)))
    pts = []
    for n in n_range:
        pts.extend(vert_n(n, rho).sample(per + 8)[:per])
    pts = pts[:count]
    ctx = ctx or SpectralData(u, K, n_max=max(n_range) + 4)
    return np.array(pts), np.array([abs(l * ctx.H(l)) for l in pts])


# -- κ, μ --------------------------------------------------------------------

def gap_gate(gamma):
    """``Σ|γ_k|`` over the computed range plus extrapolated tail."""
    t1, _, model = _tail_estimate(np.asarray(gamma))
    return math.fsum(np.abs(gamma)) + t1, model


def kappa_mu_gap_certificates(u, n_max=12, K=None, ctx=None, strict=False):
    """``|nκ_n - 1| <= 7/12 e^{1/3}`` and ``|μ_n - 1| <= 5/3 e^{1/15} |γ_n|`` for ``1 <= n <= n_max``.

    Gate: ``Σ|γ_k| <= 1/5``. The variant ``|μ_n - 1| <= 7/6 e^{1/3} |γ_n|`` is
    reported separately with the smallest index from which it holds on the
    computed range.
    """
    ctx = ctx or SpectralData(u, K, n_max=n_max + 16)
    gam = ctx.gamma[1:]
    total, model = gap_gate(gam)
    params = {"n_max": n_max, "K": ctx.K}
    if total > GAP_GATE:
        rep = CertReport("kappa_mu", params, [], KAPPA_BOUND, False, 0, gate_failed=True,
                         notes={"gap_sum": total, "tail_model": model})
        return rep.check() if strict else rep
    margins, offending = [], []
    kap_m, mu_m, var_ok = [], [], []
    for n in range(1, n_max + 1):
        kn = kappa(u, n, "product", ctx=ctx)
        mn = mu(u, n, "product", ctx=ctx)
        g = abs(ctx.gamma[n])
        a = KAPPA_BOUND - abs(n * kn - 1)
        b = MU_FACTOR * g - abs(mn - 1)
        kap_m.append(a)
        mu_m.append(b)
        var_ok.append(abs(mn - 1) <= MU_FACTOR_GENERAL * g + TOL)
        m = min(a, b)
        margins.append(m)
        if a < -TOL or b < -TOL:
            offending.append(n)
    first = next((i + 1 for i in range(n_max) if all(var_ok[i:])), None)
    notes = {"gap_sum": total, "tail_model": model, "kappa_margins": kap_m,
             "mu_margins": mu_m, "general_variant_from_n": first}
    rep = CertReport("kappa_mu", params, margins, KAPPA_BOUND, not offending, n_max,
                     offending=offending, notes=notes)
    return rep.check() if strict else rep


# -- Q operators -------------------------------------------------------------

class QResult(NamedTuple):
    restricted: FourierTable
    full: FourierTable


def q_operator(u, n, z, lo=0):
    """``Q_{u,n}[z]`` (sum over ``ℓ >= -n``, ``ℓ != 0``) and ``Q_u[z]`` (all ``ℓ != 0``).

    ``z[j]`` is the value at ``ℓ = lo + j``; outputs live on ``lo - B .. hi + B``.
    """
    z = np.asarray(z, dtype=float)
    ell = lo + np.arange(len(z))
    B = u.band
    absu = np.abs(u.dense())
    base = np.where(ell != 0, z / np.maximum(1, np.abs(ell)), 0.0)
    full = np.convolve(absu, base)
    restricted = np.convolve(absu, np.where(ell >= -n, base, 0.0))
    return QResult(FourierTable(lo - B, restricted), FourierTable(lo - B, full))


def run_all(u, s=0.0, n_max=8, K=None, Cs=None):
    """Every certificate that applies to ``u``, ordered by name."""
    p = _params(s)
    Cs = estimate_Cs(p.s) if Cs is None else Cs
    reps = [
        halfplane_certificate(u, p.s, Cs=Cs, K=K),
        kappa_mu_gap_certificates(u, n_max=n_max, K=K),
        region_bound_certificates(u, p.s, n_range=range(0, n_max + 1), K=K, Cs=Cs),
    ]
    return sorted(reps, key=lambda r: r.name)
