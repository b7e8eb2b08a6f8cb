import warnings

import numpy as np
import pytest

from bolax.errors import GapTooSmallWarning, MethodUnavailable
from bolax.genfun import (
    SpectralData,
    eta_and_zero_check,
    evaluate_H,
    kappa,
    mu,
    partial_fraction,
    residue_F,
    spectral_functionals,
    zeros_minus_poles,
)
from bolax.laxop import vert_n
from conftest import Q, random_complex_potential


@pytest.fixture(scope="module")
def one_ctx(onegap):
    return SpectralData(onegap, 64, n_max=30)


@pytest.fixture(scope="module")
def two_ctx(twogap):
    return SpectralData(twogap, 64, n_max=30)


def test_H_zero_potential(zero):
    assert evaluate_H(zero, -2.0, K=16) == pytest.approx(0.5)


def test_H_zero_at_shifted_eigenvalue(one_ctx):
    assert abs(one_ctx.H(one_ctx.lam[0] + 1)) < 1e-8


@pytest.mark.parametrize("which", ["one", "two", "complex"])
def test_H_methods_agree(which, one_ctx, two_ctx):
    ctx = {"one": one_ctx, "two": two_ctx}.get(which)
    if ctx is None:
        ctx = SpectralData(random_complex_potential(5, scale=0.03), 48, n_max=24)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 8, 50) + 1j * rng.uniform(-2, 2, 50)
    for lam in pts:
        a = evaluate_H(ctx.u, lam, ctx=ctx)
        b = evaluate_H(ctx.u, lam, method="product", ctx=ctx)
        assert abs(a - b) < 1e-7


def test_H_bound_small_random():
    u = random_complex_potential(11, scale=0.005)
    ctx = SpectralData(u, 48)
    lam = 5.5
    assert vert_n(5, 0.25).contains(lam)
    h = abs(evaluate_H(u, lam, ctx=ctx))
    assert 2 / 3 / abs(lam) <= h <= 4 / 3 / abs(lam)


def test_F_zero(zero):
    ctx = SpectralData(zero, 24)
    assert residue_F(zero, 0, ctx=ctx) == pytest.approx(-1)
    for n in (1, 2, 5):
        assert abs(residue_F(zero, n, ctx=ctx)) < 1e-14


@pytest.mark.parametrize("method", ["contour", "projector", "eigenvector"])
def test_F_onegap(onegap, one_ctx, method):
    assert abs(residue_F(onegap, 1, method, ctx=one_ctx) + Q * Q) < 1e-8


def test_F_vanishes_iff_gap_vanishes(twogap, two_ctx):
    for n in range(1, 8):
        F = residue_F(twogap, n, ctx=two_ctx)
        assert (abs(F) > 1e-8) == (abs(two_ctx.gamma[n]) > 1e-8)


def test_eigenvector_method_complex_unavailable(small_complex):
    with pytest.raises(MethodUnavailable):
        residue_F(small_complex, 1, "eigenvector", K=32)
    with pytest.raises(MethodUnavailable):
        mu(small_complex, 1, "innerproduct", K=32)


def test_kappa_zero(zero):
    ctx = SpectralData(zero, 32)
    for m in ("eta", "product"):
        assert kappa(zero, 0, m, ctx=ctx) == pytest.approx(1, abs=1e-12)
        for n in (1, 2, 7):
            assert kappa(zero, n, m, ctx=ctx) == pytest.approx(1 / n, abs=1e-12)


@pytest.mark.parametrize("method", ["eta", "product"])
def test_kappa_onegap(onegap, one_ctx, method):
    assert abs(kappa(onegap, 1, method, ctx=one_ctx) - (1 - Q * Q)) < 1e-8


def test_kappa_bound_small_random():
    u = random_complex_potential(21, scale=0.01)
    ctx = SpectralData(u, 48, n_max=24)
    for n in range(1, 12):
        assert abs(n * kappa(u, n, ctx=ctx) - 1) <= 7 / 12 * np.exp(1 / 3)


@pytest.mark.parametrize("method", ["product", "innerproduct"])
def test_mu_onegap(onegap, one_ctx, method):
    assert abs(mu(onegap, 1, method, ctx=one_ctx) - (1 - Q * Q)) < 1e-8
    for n in (2, 3, 6):
        assert abs(mu(onegap, n, method, ctx=one_ctx) - 1) < 1e-8


def test_mu_bounds(twogap, two_ctx):
    for n in range(1, 10):
        m = mu(twogap, n, ctx=two_ctx)
        assert 0 < m.real <= 1 + 1e-12
        assert abs(m - mu(twogap, n, "innerproduct", ctx=two_ctx)) < 1e-8
    u = random_complex_potential(4, scale=0.01)
    ctx = SpectralData(u, 48, n_max=24)
    for n in range(1, 10):
        assert abs(mu(u, n, ctx=ctx) - 1) <= 5 / 3 * np.exp(1 / 15) * abs(ctx.gamma[n]) + 1e-12
    with pytest.raises(ValueError):
        mu(u, 0, ctx=ctx)


@pytest.mark.parametrize("n, expected", [(0, -1), (1, 0), (2, 0), (5, 0)])
def test_argument_principle(onegap, one_ctx, n, expected):
    assert zeros_minus_poles(onegap, n, ctx=one_ctx) == expected


def test_argument_principle_twogap(twogap, two_ctx):
    assert [zeros_minus_poles(twogap, n, ctx=two_ctx) for n in range(4)] == [-1, 0, 0, 0]


def test_eta_zero(zero):
    chk = eta_and_zero_check(zero, 3, K=24)
    assert np.allclose(chk.values, 1, atol=1e-10)
    assert chk.zero_residual is None
    assert chk.inside.any() and (~chk.inside).any()


def test_eta_onegap(onegap, one_ctx):
    chk = eta_and_zero_check(onegap, 1, ctx=one_ctx)
    assert chk.zero_residual < 1e-8


def test_eta_bounds_small():
    u = random_complex_potential(8, scale=0.01)
    ctx = SpectralData(u, 48, n_max=24)
    for n in (1, 3):
        v = np.abs(eta_and_zero_check(u, n, ctx=ctx).values)
        assert np.all(v >= 1 / 140) and np.all(v <= 140)


def test_partial_fraction_converges(twogap, two_ctx):
    F = [residue_F(twogap, n, ctx=two_ctx) for n in range(12)]
    lam = 0.5 + 0.7j
    errs = [abs(two_ctx.H(lam) - partial_fraction(two_ctx, lam, F[:m])) for m in (1, 2, 4)]
    assert errs[-1] < 1e-10
    assert errs[0] >= errs[1] >= errs[2]


def test_table_consistency(twogap, two_ctx):
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        sf = spectral_functionals(twogap, 5, ctx=two_ctx)
    assert any(issubclass(w.category, GapTooSmallWarning) for w in rec)
    assert not any(f.any() for f in sf.flags.values())
    assert np.nanmax(sf.F_kappa_gamma) < 1e-8
    F = sf.best("F")
    assert np.all(F.real <= 1e-12)
    assert np.all(sf.best("kappa").real > 0)


def test_summability_stable_under_refinement(twogap):
    vals = []
    for K in (64, 128):
        ctx = SpectralData(twogap, K, n_max=20)
        F = np.array([residue_F(twogap, n, ctx=ctx) for n in range(1, 10)])
        vals.append(np.sum(np.arange(1, 10) ** 2 * np.abs(F)))
    assert abs(vals[0] - vals[1]) < 1e-8
