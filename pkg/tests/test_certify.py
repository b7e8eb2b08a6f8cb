import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bolax.certify import (
    KAPPA_BOUND,
    MU_FACTOR,
    distance_margin,
    estimate_Cs,
    h_bound_samples,
    halfplane_certificate,
    halfplane_points,
    k_M,
    kappa_mu_gap_certificates,
    multiplication_ratios,
    q_operator,
    region_bound_certificates,
    run_all,
)
from bolax.errors import BoundViolated, GateFailed
from bolax.fourier import Potential, sobolev_norm
from bolax.report import CertReport
from conftest import Q, random_complex_potential


def test_constants():
    assert KAPPA_BOUND == pytest.approx(0.8141, abs=1e-4)
    assert MU_FACTOR * (Q * Q / (1 - Q * Q)) == pytest.approx(0.1762, abs=1e-4)


def test_Cs_basic():
    r = multiplication_ratios(0.0, 100, seed=0)
    assert r[0, 0] == pytest.approx(1.0)
    assert estimate_Cs(0.0) >= 1
    with pytest.raises(ValueError):
        estimate_Cs(0.0, trials=50)


def test_Cs_deterministic_and_monotone():
    a = estimate_Cs(0.1, trials=100, seed=3)
    assert a == max(1.0, multiplication_ratios(0.1, 100, seed=3).max())
    assert estimate_Cs(0.1, trials=300, seed=3) >= a


def test_Cs_self_consistent_held_out():
    Cs = estimate_Cs(0.25, trials=400, seed=0)
    held = multiplication_ratios(0.25, 100, seed=0)
    assert held.max() <= Cs


@pytest.mark.parametrize("Cs, M, s", [(1.0, 0.5, 0.0), (1.2, 0.3, 0.25), (2.0, 1.0, 0.1)])
def test_k_M(Cs, M, s):
    assert k_M(Cs, M, s) == (2 * Cs * M) ** (2 / (0.5 - s)) + 1


def test_halfplane_points_in_region():
    KM = 3.0
    pts = halfplane_points(KM, 200)
    assert len(pts) == 200
    left = pts.real <= -KM
    diag = np.abs(pts.imag) >= pts.real + 2 * KM - 1e-12
    assert np.all(left | diag)


def test_halfplane_zero(zero):
    rep = halfplane_certificate(zero, samples=40)
    assert rep.passed and rep.worst_margin >= 0.5 - 1e-12


def test_halfplane_onegap(onegap):
    rep = halfplane_certificate(onegap, 0.0, samples=200)
    assert rep.passed and rep.samples == 200
    assert rep.params["K_M"] == pytest.approx(k_M(rep.params["C_s_hat"], onegap.norm(), 0))


def test_halfplane_gate(onegap):
    rep = halfplane_certificate(onegap, M=0.1, samples=20)
    assert rep.gate_failed and not rep.passed
    with pytest.raises(GateFailed):
        halfplane_certificate(onegap, M=0.1, samples=20, strict=True)


def test_halfplane_halving_monotone(onegap):
    M = onegap.norm()
    full = halfplane_certificate(onegap, M=M, samples=80)
    half = halfplane_certificate(onegap.scaled(0.5), M=M, samples=80)
    assert full.passed and half.passed
    assert half.worst_margin >= full.worst_margin


def test_distance_margin_example():
    assert abs(7 - 5.5) >= 0.25 * 2
    assert distance_margin(5.5, 5, 0.25, 64) == pytest.approx(0.25)


def _scaled(u, target, s=0.0):
    return u.scaled(target / u.norm(-s))


def test_region_zero(zero):
    rep = region_bound_certificates(zero, n_range=range(0, 4), K=32)
    assert rep.passed
    assert rep.notes["worst_H"] == pytest.approx(1 / 3, abs=1e-12)


def test_region_scaled_margin(twogap):
    Cs = estimate_Cs(0.0)
    u = _scaled(twogap, 0.25 / (8 * Cs))
    rep = region_bound_certificates(u, n_range=range(0, 6), K=64, Cs=Cs)
    assert rep.passed
    assert rep.notes["worst_contraction"] >= 0.125


def test_region_halving(twogap):
    Cs = estimate_Cs(0.0)
    u = _scaled(twogap, 0.25 / (4 * Cs))
    a = region_bound_certificates(u, n_range=range(0, 4), K=64, Cs=Cs)
    b = region_bound_certificates(u.scaled(0.5), n_range=range(0, 4), K=64, Cs=Cs)
    assert b.passed or not a.passed
    assert b.notes["worst_contraction"] >= a.notes["worst_contraction"]


def test_region_gate(onegap):
    rep = region_bound_certificates(onegap, n_range=range(0, 3), K=64)
    assert rep.gate_failed


def test_h_bound_samples_small():
    u = random_complex_potential(2, scale=0.005)
    pts, vals = h_bound_samples(u, range(1, 6), count=100, K=48)
    assert len(vals) == 100
    assert np.all((vals >= 2 / 3) & (vals <= 4 / 3))


def test_kappa_mu_zero(zero):
    rep = kappa_mu_gap_certificates(zero, n_max=6, K=32)
    assert rep.passed and max(rep.notes["kappa_margins"]) == pytest.approx(KAPPA_BOUND)


def test_kappa_mu_onegap(onegap):
    rep = kappa_mu_gap_certificates(onegap, n_max=8, K=64)
    assert rep.passed
    assert rep.notes["kappa_margins"][0] == pytest.approx(KAPPA_BOUND - Q * Q, abs=1e-8)
    g1 = Q * Q / (1 - Q * Q)
    assert rep.notes["mu_margins"][0] == pytest.approx(MU_FACTOR * g1 - Q * Q, abs=1e-8)


def test_kappa_mu_gate_twogap(twogap):
    rep = kappa_mu_gap_certificates(twogap, n_max=6, K=64)
    assert rep.gate_failed and rep.notes["gap_sum"] > 0.2
    with pytest.raises(GateFailed):
        kappa_mu_gap_certificates(twogap, n_max=6, K=64, strict=True)


def test_report_check_raises():
    rep = CertReport("x", {}, [-1.0], 1.0, False, 1, offending=[3.0])
    with pytest.raises(BoundViolated):
        rep.check()
    assert rep.to_dict()["worst_margin"] == -1.0


def test_q_operator_zero():
    r = q_operator(Potential.zero(2), 3, np.ones(7), lo=-3)
    assert not r.full.values.any() and not r.restricted.values.any()


def test_q_operator_single_term():
    u = Potential(1, {1: 1.0})
    r = q_operator(u, 0, [1.0], lo=1)
    assert r.full.coeff(2) == 1
    assert r.full.coeff(1) == 0 and r.full.coeff(0) == 0


@settings(max_examples=30)
@given(st.integers(0, 6), st.integers(-8, 0), st.integers(0, 2**31 - 1))
def test_q_operator_domination(n, lo, seed):
    rng = np.random.default_rng(seed)
    u = random_complex_potential(seed % 50, band=3, scale=0.3)
    z = np.abs(rng.standard_normal(15))
    r = q_operator(u, n, z, lo=lo)
    assert np.all(r.restricted.values.real <= r.full.values.real + 1e-15)
    for s in (0.0, 0.25):
        assert sobolev_norm(r.restricted, -s) <= sobolev_norm(r.full, -s) + 1e-15


def test_run_all_sorted(onegap):
    reps = run_all(onegap, n_max=4, K=64)
    assert [r.name for r in reps] == sorted(r.name for r in reps)
