import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bolax.errors import BandTooSmall, GridTooSmall, MethodUnavailable, PhaseDegenerate, RootOutOfDisc
from bolax.finitegap import (
    FiniteGapSpec,
    collinearity_defect,
    finite_gap_report,
    g_infinity,
    g_infinity_closed_form,
    gap_vanishing_checks,
    gn_convergence_table,
    normalize_phases,
    normalized_eigenfunctions,
    potential_from_roots,
    projected_potential_on_grid,
    shift_identity_residual,
)
from bolax.fourier import Potential, multiply
from bolax.genfun import SpectralData, mu
from conftest import Q, random_complex_potential

X = np.linspace(0, 2 * np.pi, 97, endpoint=False)


@pytest.fixture(scope="module")
def one_table(onegap):
    return normalized_eigenfunctions(onegap, 12, K=64)


@pytest.fixture(scope="module")
def two_table(twogap):
    return normalized_eigenfunctions(twogap, 12, K=64)


def test_single_root_coefficients(onegap):
    k = np.arange(1, 25)
    assert np.allclose([onegap.coeff(int(j)) for j in k], Q ** k, rtol=1e-14, atol=0)
    assert onegap.coeff(0) == 0
    assert onegap.is_real()


def test_two_root_coefficients(twogap):
    assert twogap.coeff(1) == pytest.approx(0.5)
    assert twogap.coeff(2) == pytest.approx(0.13)
    assert twogap.coeff(-2) == pytest.approx(0.13)


@pytest.mark.parametrize("roots", [[0.3], [0.3, 0.2], [0.25j, -0.4], [0.1 + 0.2j]])
def test_grid_oracle(roots):
    spec = FiniteGapSpec(roots)
    u = potential_from_roots(spec, spec.min_band())
    proj = sum(u.coeff(k) * np.exp(1j * k * X) for k in range(1, u.band + 1))
    assert np.max(np.abs(proj - projected_potential_on_grid(spec, X))) < 1e-11


def test_small_root_limit():
    u = potential_from_roots([1e-6], 4)
    assert u.norm() < 2e-6


@pytest.mark.parametrize("q", [0, 1, 1.5, -1j])
def test_root_out_of_disc(q):
    with pytest.raises(RootOutOfDisc):
        FiniteGapSpec([q])


def test_band_too_small():
    with pytest.raises(BandTooSmall):
        potential_from_roots([0.3], 10)
    spec = FiniteGapSpec([0.3])
    assert spec.tail(spec.min_band()) < 1e-12 <= spec.tail(spec.min_band() - 1)


def test_g_inf_zero():
    g = g_infinity(Potential.zero(3))
    assert g.coeff(0) == pytest.approx(1)
    assert np.abs(g.values).sum() == pytest.approx(1)


@pytest.mark.parametrize("roots", [[0.3], [0.3, 0.2]])
def test_g_inf_closed_form(roots):
    u = potential_from_roots(roots, 24)
    g = g_infinity(u)
    assert np.max(np.abs(g.evaluate(X) - g_infinity_closed_form(roots, X))) < 1e-10


def _check_g_inf(u):
    g = g_infinity(u)
    assert abs(g.l2_norm() - 1) < 1e-10
    assert np.max(np.abs(np.abs(g.evaluate(X)) - 1)) < 1e-10
    Dg = type(g)(g.lo, g.modes * g.values)
    ug = multiply(u, g)
    lo, hi = g.lo + 4, g.hi - 4
    assert np.max(np.abs(Dg.window(lo, hi) - ug.window(lo, hi))) < 1e-9


def test_g_inf_properties_twogap(twogap):
    _check_g_inf(twogap)


@settings(max_examples=15)
@given(st.lists(st.floats(-0.3, 0.3), min_size=2, max_size=8))
def test_g_inf_properties_random_real(vals):
    u = Potential(len(vals), {k + 1: v * (1 + 0.5j) for k, v in enumerate(vals)}, hermitian=True)
    _check_g_inf(u)


def test_g_inf_grid_too_small(twogap):
    with pytest.raises(GridTooSmall):
        g_infinity(twogap, out_band=4)


def test_eigenfunctions_zero(zero):
    tb = normalized_eigenfunctions(zero, 6, K=16)
    assert np.allclose(tb.f[:, :7], np.eye(16)[:, :7], atol=1e-13)
    for n in range(7):
        g = tb.g(n)
        assert abs(g.coeff(0) - 1) < 1e-13


def test_phase_conditions(two_table):
    f = two_table.f
    assert np.allclose(np.linalg.norm(f, axis=0), 1)
    assert f[0, 0].real > 0 and abs(f[0, 0].imag) < 1e-14
    for n in range(1, f.shape[1]):
        assert two_table.pairing(n) > 0


def test_phase_degenerate():
    f = np.eye(4, dtype=complex)[:, [1, 0]]
    with pytest.raises(PhaseDegenerate):
        normalize_phases(f)


def test_complex_unsupported(small_complex):
    with pytest.raises(MethodUnavailable):
        normalized_eigenfunctions(small_complex, 4, K=32)


def test_onegap_collinear(one_table):
    K = one_table.K
    g = one_table.g_inf
    for n in range(1, 10):
        h = g.window(-n, K - 1 - n)
        assert collinearity_defect(one_table.f[:, n], h) < 1e-8


@pytest.mark.parametrize("which", ["one", "two"])
def test_pairing_is_sqrt_mu(which, onegap, twogap, one_table, two_table):
    u, tb = (onegap, one_table) if which == "one" else (twogap, two_table)
    ctx = SpectralData(u, 64, n_max=30)
    for n in range(1, 10):
        assert abs(tb.pairing(n) ** 2 - mu(u, n, "product", ctx=ctx).real) < 1e-8


def test_convergence_zero(zero):
    ct = gn_convergence_table(zero, 5, K=24)
    assert np.max(ct.dist_inf) < 1e-12 and np.max(ct.step) < 1e-12
    assert ct.fit_exponent is None


def test_convergence_onegap(onegap, one_table):
    ct = gn_convergence_table(onegap, 12, table=one_table)
    assert np.max(ct.dist_inf) < 1e-8
    assert ct.step_ok.all()
    assert ct.tau == pytest.approx(0.25)


def test_convergence_twogap(twogap, two_table):
    ct = gn_convergence_table(twogap, 12, table=two_table)
    assert ct.step_ok.all()
    assert np.max(ct.dist_inf[1:]) < 1e-8
    assert ct.dist_inf[0] > 1e-4


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_shift_identity_random(onegap, seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(48) + 1j * rng.standard_normal(48)
    assert shift_identity_residual(onegap, f) < 1e-12


def test_shift_identity_complex():
    u = random_complex_potential(3, scale=0.2)
    f = np.random.default_rng(9).standard_normal(40).astype(complex)
    assert shift_identity_residual(u, f) < 1e-12


@pytest.mark.parametrize("n", [3, 5, 8])
def test_gap_vanishing(twogap, two_table, n):
    chk = gap_vanishing_checks(twogap, two_table, n)
    assert max(chk) < 1e-7


def test_gap_vanishing_fails_on_open_gap(twogap, two_table):
    chk = gap_vanishing_checks(twogap, two_table, 1)
    assert min(chk) > 1e-3


@pytest.mark.parametrize("roots", [[0.3], [0.3, 0.2], [0.4, -0.3, 0.2j]])
def test_finite_gap_report(roots):
    spec = FiniteGapSpec(roots)
    rep = finite_gap_report(spec, max(24, spec.min_band()), K=96, n_max=14)
    assert rep.N == len(roots)
    assert rep.last_gap_nonzero
    assert rep.max_gap_beyond < 1e-8
    assert rep.max_shift_beyond < 1e-8
