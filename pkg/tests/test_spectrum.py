import numpy as np
import pytest

from bolax import Potential
from bolax.errors import DiscAssignmentConflict, NonIntegerTrace, ContourThroughSpectrum
from bolax.laxop import LaxMatrix
from bolax.spectrum import (
    auto_K,
    contour_eigen,
    contour_quadrature,
    contour_spectrum,
    counting_certificate,
    dense_spectrum,
    gaps_and_moment_map,
    identity_residuals,
    near_zero_discs,
    projector_defect,
    riesz_projector,
)
from conftest import Q, random_complex_potential

LAM0 = -Q * Q / (1 - Q * Q)


def kick(eps=0.01):
    return Potential(1, {1: 1j * eps, -1: 1j * eps})


def test_zero_spectrum_exact(zero):
    sp = dense_spectrum(LaxMatrix(zero, 64))
    assert sp.n_max == 32
    assert np.max(np.abs(sp.eigenvalues - np.arange(33))) < 1e-12
    assert np.max(np.abs(sp.gaps())) < 1e-12


def test_onegap_dense(onegap):
    sp = dense_spectrum(LaxMatrix(onegap, 64), n_max=20)
    assert abs(sp[0] - LAM0) < 1e-8
    assert np.max(np.abs(sp.eigenvalues[1:] - np.arange(1, 21))) < 1e-8
    assert sp.residuals.max() < 1e-10
    assert np.all(np.diff(sp.eigenvalues.real) > 0)
    assert np.max(np.abs(sp.eigenvalues.imag)) < 1e-12


def test_onegap_quadruple_truncation(onegap):
    a = dense_spectrum(LaxMatrix(onegap, 64), n_max=10).eigenvalues
    b = dense_spectrum(LaxMatrix(onegap, 256), n_max=10).eigenvalues
    assert np.max(np.abs(a - b)) < 1e-10


def test_perturbed_onegap_one_per_disc(onegap):
    u = onegap + kick()
    L = LaxMatrix(u, 64)
    ref = dense_spectrum(LaxMatrix(onegap, 64), n_max=12)
    sp = dense_spectrum(L, discs=ref.discs)
    assert np.all(np.abs(sp.eigenvalues.imag) < 0.25)
    for n, d in enumerate(ref.discs):
        assert contour_eigen(u, d, L=L).count == 1


def test_disc_conflict(zero):
    L = LaxMatrix(zero, 16)
    with pytest.raises(DiscAssignmentConflict):
        dense_spectrum(L, discs=[(0.5, 0.9)])
    with pytest.raises(DiscAssignmentConflict):
        dense_spectrum(L, discs=[(0.5, 0.1)])


def test_contour_examples(zero, onegap):
    r = contour_eigen(zero, (3, 1 / 3), K=16)
    assert r.count == 1 and r.eigenvalue == pytest.approx(3.0, abs=1e-12)
    r = contour_eigen(zero, (3.5, 0.25), K=16)
    assert r.count == 0 and r.eigenvalue is None
    r = contour_eigen(onegap, (0, 1 / 3), K=64)
    assert abs(r.eigenvalue - LAM0) < 1e-8
    d = dense_spectrum(LaxMatrix(onegap, 64), n_max=2)
    assert abs(r.eigenvalue - d[0]) < 1e-8


def test_contour_through_spectrum(zero):
    with pytest.raises(ContourThroughSpectrum):
        contour_eigen(zero, (2, 1.0), K=8, M=8, adaptive=False)


def test_contour_two_inside(zero):
    r = contour_eigen(zero, (1.5, 0.9), K=8)
    assert r.count == 2 and r.eigenvalue is None


def test_nonintegral_trace_guard():
    with pytest.raises(NonIntegerTrace):
        # a bare quadrature of 0.5/(λ - c): integrates to 0.5
        from bolax.spectrum import _round_trace

        _round_trace(0.5 + 0j)


def test_contour_quadrature_doubling():
    val, M, ok = contour_quadrature(lambda z: np.array([1 / z]), 0, 1.0, 8)
    assert ok and M == 16 and val[0] == pytest.approx(1)
    with pytest.raises(ValueError):
        contour_quadrature(lambda z: z, 0, 1, 12)


@pytest.mark.parametrize("seed", [1, 2])
def test_dense_vs_contour_complex(seed):
    u = random_complex_potential(seed, scale=0.05)
    L = LaxMatrix(u, 48)
    sp = dense_spectrum(L, n_max=6)
    cs = contour_spectrum(u, near_zero_discs(6), L=L)
    assert np.max(np.abs(sp.eigenvalues - cs.eigenvalues)) < 1e-8
    assert np.all(np.abs(sp.eigenvalues - np.arange(7)) < 0.25)
    d = np.abs(np.subtract.outer(sp.eigenvalues, np.arange(7) + 1 / 3 * 0))
    assert np.all(np.abs(sp.eigenvalues - np.arange(7)) <= 1 / 3 - 1 / 12)
    assert d.shape == (7, 7)


def test_projector_examples(zero, onegap):
    P = riesz_projector(zero, (2, 1 / 3), K=8)
    ref = np.zeros((8, 8))
    ref[2, 2] = 1
    assert np.allclose(P, ref, atol=1e-12)
    P = riesz_projector(onegap, (1, 1 / 3), K=64)
    assert projector_defect(P) < 1e-8
    assert abs(np.trace(P) - 1) < 1e-6
    assert np.linalg.matrix_rank(P, tol=1e-6) == 1
    assert P[0, 0] == pytest.approx(Q * Q, abs=1e-8)
    P3 = riesz_projector(onegap, (3, 1 / 3), K=64)
    assert abs(P3[0, 0]) < 1e-8


def test_gaps_examples(zero, onegap, twogap):
    g = gaps_and_moment_map(dense_spectrum(LaxMatrix(zero, 40), n_max=8))
    assert g.weighted_norm == 0 and len(g) == 8
    g = gaps_and_moment_map(dense_spectrum(LaxMatrix(onegap, 64), n_max=8))
    assert g[1] == pytest.approx(Q * Q / (1 - Q * Q), abs=1e-10)
    assert np.max(np.abs(g.gamma[1:])) < 1e-10
    assert np.all(np.diff(g.partial_sums) >= 0)
    norms = [gaps_and_moment_map(dense_spectrum(LaxMatrix(twogap, K), n_max=12), 0.25).weighted_norm
             for K in (64, 128)]
    assert abs(norms[0] - norms[1]) < 1e-7
    with pytest.raises(IndexError):
        g[0]


def test_real_gaps_nonnegative(twogap):
    g = gaps_and_moment_map(dense_spectrum(LaxMatrix(twogap, 64), n_max=20))
    assert np.all(g.gamma.real >= -1e-10)


def test_identity_residuals(zero, onegap):
    sp = dense_spectrum(LaxMatrix(zero, 40), n_max=8)
    ir = identity_residuals(sp, gaps_and_moment_map(sp), zero)
    assert ir.trace.max() == 0 and ir.action == 0
    sp = dense_spectrum(LaxMatrix(onegap, 64), n_max=16)
    ir = identity_residuals(sp, gaps_and_moment_map(sp), onegap)
    assert ir.action < 1e-8
    assert ir.action_lhs == pytest.approx(2 * Q * Q / (1 - Q * Q))
    ir = identity_residuals(sp, gaps_and_moment_map(sp), onegap, s=0.25)
    assert ir.action is None


def test_trace_residual_decreases_with_K():
    u = random_complex_potential(3, band=6, scale=0.04)
    res = []
    # more gaps become available as K grows, so the missing tail shrinks
    for K in (16, 24, 32, 64):
        sp = dense_spectrum(LaxMatrix(u, K), n_max=K // 2)
        res.append(identity_residuals(sp, gaps_and_moment_map(sp), u).trace[:4].max())
    # strictly decreasing until rounding level, then it stays there
    assert res[0] > 1e-10 and res[0] > res[1] > res[2]
    assert res[2] < 1e-13 and res[3] < 1e-13


def test_counting_examples(onegap):
    rep = counting_certificate(onegap, onegap, K=64, n_max=6)
    assert rep.passed and rep.notes["counts"] == [1] * 7
    rep = counting_certificate(onegap + kick(), onegap, K=64, n_max=12)
    assert rep.passed
    big = Potential(1, {1: 5 / np.sqrt(2), -1: 5 / np.sqrt(2)})
    rep = counting_certificate(onegap + big, onegap, K=64, n_max=12)
    assert not rep.passed
    from bolax.errors import CountMismatch

    with pytest.raises(CountMismatch) as exc:
        rep.check()
    assert exc.value.n is not None


def test_auto_K():
    assert auto_K(10, 3) == 10 + 24 + 32
