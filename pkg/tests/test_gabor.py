import numpy as np
import pytest

from tflab.gabor import (ConditioningError, GaborSystem, NotAFrameError,
                         analysis, core_basis, covers_torus, dual_window,
                         frame_apply, frame_bounds, sampled_frame_bounds,
                         synthesis, tight_window)
from tflab.lattices import build_lattice
from tflab.signals import SampledSignal, gaussian_window, inner, \
    random_concentrated_signal, tf_shift
from tflab.stft import stft


def test_grid_compatibility_enforced(gauss):
    with pytest.raises(ValueError):
        GaborSystem(gauss, build_lattice(0.3, 0.5, 1, 2))     # off-grid alpha
    with pytest.raises(ValueError):
        GaborSystem(gauss, build_lattice(0.5, 0.3, 1, 2))     # off-grid beta
    with pytest.raises(ValueError):
        GaborSystem(gauss, build_lattice(0.5, 0.5, 1, 9.0))   # positions wrap


def test_analysis_matches_stft(system, gauss, rng):
    f = random_concentrated_signal(1, gauss.L, gauss.N, rng)
    c = analysis(system, f)
    pts = [tuple(p.reshape(2)) for p in system.lattice.points[::37]]
    vals = stft(f, gauss, [(np.atleast_1d(x), np.atleast_1d(w)) for x, w in pts])
    assert np.allclose(c[::37], vals, atol=1e-12)


def test_analysis_examples(system, gauss):
    c = analysis(system, gauss)
    assert c[system.lattice.index_of([0, 0])] == pytest.approx(1.0)
    z = SampledSignal(1, gauss.L, gauss.N, np.zeros(gauss.N))
    assert np.all(analysis(system, z) == 0)


def test_analysis_covariance(system, gauss):
    # |c_lam| for f = pi(mu) g equals |V_g g(lam - mu)|
    mu = np.array([1.0, -0.5])
    f = tf_shift(gauss, mu[:1], mu[1:])
    c = analysis(system, f)
    for idx in (0, 57, 220, 301):
        lam = system.lattice.points[idx]
        ref = abs(stft(gauss, gauss, [(lam[:1] - mu[:1], lam[1:] - mu[1:])])[0])
        assert abs(abs(c[idx]) - ref) < 1e-10


def test_synthesis_of_basis_vector(system, gauss):
    e = np.zeros(len(system.lattice))
    e[system.lattice.index_of([0, 0])] = 1.0
    out = synthesis(system, e)
    assert np.allclose(out.data, gauss.data)


def test_adjointness(system, gauss, rng):
    # <synthesis(c), f> = <c, analysis(f)>
    for _ in range(5):
        c = rng.normal(size=len(system.lattice)) + 1j * rng.normal(size=len(system.lattice))
        f = random_concentrated_signal(1, gauss.L, gauss.N, rng)
        lhs = inner(synthesis(system, c), f)
        rhs = np.sum(c * np.conj(analysis(system, f)))
        assert abs(lhs - rhs) < 1e-10


def test_frame_operator_self_adjoint_psd(system, gauss, rng):
    f1 = random_concentrated_signal(1, gauss.L, gauss.N, rng)
    f2 = random_concentrated_signal(1, gauss.L, gauss.N, rng)
    s1 = frame_apply(system, f1)
    s2 = frame_apply(system, f2)
    assert inner(s1, f1).real >= 0
    assert abs(inner(s1, f2) - inner(f1, s2)) < 1e-10


def test_frame_bounds_against_dense_eigensolver(system):
    # oracle: dense eigendecomposition of the compressed frame matrix
    fb = frame_bounds(system, trials=2)
    Q = core_basis(system, system.lattice.radius - 2.5)
    from tflab.gabor import _frame_matvec
    apply = _frame_matvec(system)
    SQ = np.column_stack([apply(Q[:, j]) for j in range(Q.shape[1])])
    Sc = Q.conj().T @ SQ
    vals = np.linalg.eigvalsh(0.5 * (Sc + Sc.conj().T))
    assert fb.B == pytest.approx(vals[-1], rel=1e-8)
    assert fb.A == pytest.approx(vals[0], rel=1e-8)
    assert 0 < fb.A <= fb.B
    assert fb.ratio < 1.2          # alpha beta = 1/4 Gaussian frame is near tight


def test_critical_density_collapse(gauss):
    # Balian-Low-type trend: at alpha = beta = 1 the lower bound sinks
    # relative to the upper as the truncation grows
    ratios = []
    for R in (3.0, 7.0):
        sys_c = GaborSystem(gauss, build_lattice(1.0, 1.0, 1, R))
        fb = frame_bounds(sys_c, trials=2)
        ratios.append(fb.A / fb.B)
    assert ratios[1] < 0.6 * ratios[0]


def test_not_a_frame_detected(gauss):
    # absurdly sparse lattice: alpha beta = 16 cannot be a frame
    sys_bad = GaborSystem(gauss, build_lattice(4.0, 4.0, 1, 7.9))
    with pytest.raises(NotAFrameError):
        frame_bounds(sys_bad, trials=1)


def test_dual_window_cg_on_covering_lattice(gauss):
    lat_full = build_lattice(0.5, 0.5, 1, 7.99)
    sys_full = GaborSystem(gauss, lat_full)
    assert covers_torus(sys_full)
    h = dual_window(sys_full)
    resid = frame_apply(sys_full, h).data - gauss.data
    assert np.linalg.norm(resid) / np.linalg.norm(gauss.data) <= 1e-10


def test_dual_window_reconstruction(system, gauss, rng):
    h = dual_window(system)
    sys_h = GaborSystem(h, system.lattice)
    for _ in range(6):
        f = random_concentrated_signal(1, gauss.L, gauss.N, rng, spread=0.6,
                                       max_freq=0.6)
        rec = synthesis(system, analysis(sys_h, f))
        err = np.linalg.norm(rec.data - f.data) / np.linalg.norm(f.data)
        assert err <= 1e-6
        # the dual role is symmetric: D_h C_g f = f as well
        rec2 = synthesis(sys_h, analysis(system, f))
        err2 = np.linalg.norm(rec2.data - f.data) / np.linalg.norm(f.data)
        assert err2 <= 1e-6


def test_tight_window_parseval(system, gauss, rng):
    gt = tight_window(system)
    sys_t = GaborSystem(gt, system.lattice)
    sigs = [random_concentrated_signal(1, gauss.L, gauss.N, rng, spread=0.6,
                                       max_freq=0.6) for _ in range(8)]
    fb = sampled_frame_bounds(sys_t, sigs)
    assert fb.ratio - 1 <= 1e-6
    for f in sigs:
        c = analysis(sys_t, f)
        assert np.sum(np.abs(c) ** 2) == pytest.approx(f.norm() ** 2, rel=1e-6)


def test_tight_window_of_tight_system_is_proportional(system, gauss):
    gt = tight_window(system)
    sys_t = GaborSystem(gt, system.lattice)
    gtt = tight_window(sys_t)
    # re-tightening an already tight window only rescales it (on the core)
    t = gauss.axis_positions()
    sel = np.abs(t) < 2.0
    scale = gtt.data[sel] / gt.data[sel]
    assert np.max(np.abs(scale - scale.mean())) < 1e-6


def test_coefficient_decay_superpolynomial(system, gauss):
    # smooth window: analysis coefficients of a smooth centered signal decay
    # faster than any tested polynomial (fitted log-log slope grows)
    f = tf_shift(gauss, [0.25], [0.25])
    c = np.abs(analysis(system, f))
    dist = np.linalg.norm(system.lattice.points - np.array([0.25, 0.25]), axis=1)
    sel = (c > 1e-14) & (dist > 0.5)
    slope_small = _fit_slope(dist[sel & (dist < 3)], c[sel & (dist < 3)])
    slope_large = _fit_slope(dist[sel & (dist >= 3)], c[sel & (dist >= 3)])
    assert slope_large > slope_small + 2


def _fit_slope(d, c):
    A = np.column_stack([np.ones_like(d), -np.log(d)])
    coef, *_ = np.linalg.lstsq(A, np.log(c), rcond=None)
    return coef[1]
