import numpy as np
import pytest

from tflab.config import Thresholds
from tflab.signals import SampledSignal, gaussian_window, random_concentrated_signal, tf_shift
from tflab.stft import (TFPoint, cross_wigner, decay_at_infinity_profile,
                        modulation_norm_estimate, stft, stft_grid)


def brute_stft(f, g, x, w):
    """Direct quadrature oracle for a single STFT point."""
    t = f.axis_positions()
    shifted = np.roll(g.data, int(round(x / f.dx)))
    return f.dx * np.sum(f.data * np.conj(shifted * np.exp(2j * np.pi * w * t)))


def test_window_autocorrelation_at_origin(gauss):
    val = stft(gauss, gauss, [TFPoint.of(0.0, 0.0)])[0]
    assert val == pytest.approx(1.0)


def test_gaussian_closed_form(gauss, rng):
    # |V_g g(x, w)| = exp(-pi (x^2 + w^2) / 2), cross-checked by quadrature
    pts = [(1.0, 0.5), (0.5, -1.5), (2.0, 2.0), (-1.25, 0.25)]
    vals = stft(gauss, gauss, pts)
    for (x, w), v in zip(pts, vals):
        closed = np.exp(-np.pi * (x ** 2 + w ** 2) / 2)
        assert abs(abs(v) - closed) / closed < 1e-6
        assert abs(v - brute_stft(gauss, gauss, x, w)) < 1e-12


def test_covariance_property(gauss):
    # |V_g(pi(mu) f)(lam)| = |V_g f(lam - mu)|
    f = tf_shift(gauss, [0.5], [0.25])
    mu = (0.5, -0.75)
    shifted = tf_shift(f, [mu[0]], [mu[1]])
    lam = (1.0, 0.5)
    lhs = abs(stft(shifted, gauss, [lam])[0])
    rhs = abs(stft(f, gauss, [(lam[0] - mu[0], lam[1] - mu[1])])[0])
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_grid_stft_matches_pointwise(gauss, rng):
    f = random_concentrated_signal(1, gauss.L, gauss.N, rng)
    V = stft_grid(f, gauss)
    t = f.axis_positions()
    w = f.axis_frequencies()
    for _ in range(5):
        i, j = rng.integers(0, gauss.N, size=2)
        direct = brute_stft(f, gauss, t[i], w[j])
        assert abs(V[i, j] - direct) < 1e-12


def test_moyal_identity(gauss, rng):
    # ||V_g f||_{L^2} = ||f||_2 ||g||_2
    for _ in range(5):
        f = random_concentrated_signal(1, gauss.L, gauss.N, rng)
        est = modulation_norm_estimate(f, gauss, 2, 2)
        assert abs(est.value - f.norm() * gauss.norm()) < 1e-4


def test_zero_signal(gauss):
    z = SampledSignal(1, gauss.L, gauss.N, np.zeros(gauss.N))
    assert modulation_norm_estimate(z, gauss, 1, np.inf).value == 0.0


def test_dilation_grows_weighted_norm(gauss):
    # heavier tails in time cost more in the v_1-weighted mixed norm
    vals = []
    for width in (1.0, 1.5, 2.0):
        f = gaussian_window(1, gauss.L, gauss.N, width=width)
        m = lambda pts: (1 + np.sum(pts ** 2, axis=1)) ** 0.5
        vals.append(modulation_norm_estimate(f, gauss, 1, 1, m=m).value)
    assert vals[0] < vals[1] < vals[2]


@pytest.fixture(scope="module")
def phase_grid():
    # self-dual (N = L^2) small grid for 2d-signal tests
    return {"L": 8.0, "N": 64}


def test_decay_profile_bump_passes(phase_grid):
    L, N = phase_grid["L"], phase_grid["N"]
    t = (np.arange(N) - N // 2) * L / N
    xx, ww = np.meshgrid(t, t, indexing="ij")
    bump = SampledSignal(2, L, N, np.exp(-np.pi * (xx ** 2 + ww ** 2)))
    win = gaussian_window(2, L, N)
    prof = decay_at_infinity_profile(bump, win, radii=[0, 1, 2, 3], z_stride=4)
    assert prof.verdict == "m0-consistent"
    assert all(a >= b - 1e-15 for a, b in zip(prof.tails, prof.tails[1:]))


def test_decay_profile_constant_fails(phase_grid):
    L, N = phase_grid["L"], phase_grid["N"]
    const = SampledSignal(2, L, N, np.ones((N, N)))
    win = gaussian_window(2, L, N)
    prof = decay_at_infinity_profile(const, win, radii=[0, 1, 2, 3], z_stride=4)
    assert prof.verdict == "m0-failed"


def test_decay_profile_zero(phase_grid):
    L, N = phase_grid["L"], phase_grid["N"]
    zero = SampledSignal(2, L, N, np.zeros((N, N)))
    win = gaussian_window(2, L, N)
    prof = decay_at_infinity_profile(zero, win, radii=[0, 2], z_stride=4)
    assert prof.tails == [0.0, 0.0]


def test_decay_profile_needs_radii(phase_grid):
    L, N = phase_grid["L"], phase_grid["N"]
    zero = SampledSignal(2, L, N, np.zeros((N, N)))
    with pytest.raises(ValueError):
        decay_at_infinity_profile(zero, gaussian_window(2, L, N), radii=[])


def test_wigner_gaussian_closed_form(gauss):
    # W(g, g)(x, w) = 2^d exp(-2 pi (x^2 + w^2)); quadrature cross-check below
    W = cross_wigner(gauss, gauss)
    t = gauss.axis_positions()
    xx, ww = np.meshgrid(t, gauss.axis_frequencies(), indexing="ij")
    closed = 2.0 * np.exp(-2 * np.pi * (xx ** 2 + ww ** 2))
    assert np.max(np.abs(W.data - closed)) < 1e-4

    # independent quadrature oracle at one interior point
    i, j = gauss.N // 2 + 6, gauss.N // 2 - 4
    x0, w0 = t[i], gauss.axis_frequencies()[j]
    tau = t
    vals = np.interp(x0 + tau / 2, t, gauss.data.real) * \
        np.interp(x0 - tau / 2, t, gauss.data.real)
    oracle = gauss.dx * np.sum(vals * np.exp(-2j * np.pi * w0 * tau))
    assert abs(W.data[i, j] - oracle) < 1e-4


def test_wigner_mass_is_squared_norm(gauss, rng):
    f = random_concentrated_signal(1, gauss.L, gauss.N, rng)
    W = cross_wigner(f, f)
    mass = W.dx * W.dual_spacing * np.sum(W.data)
    assert mass.real == pytest.approx(f.norm() ** 2, abs=1e-10)
    assert abs(mass.imag) < 1e-12


def test_wigner_real_for_autocorrelation(gauss, rng):
    f = random_concentrated_signal(1, gauss.L, gauss.N, rng)
    W = cross_wigner(f, f)
    assert np.max(np.abs(W.data.imag)) < 1e-10 * np.max(np.abs(W.data.real))
