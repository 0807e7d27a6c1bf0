import numpy as np
import pytest

from tflab.fio import (CanonicalMap, FIOOperator, InsufficientDataError,
                       NonconvergenceError, PhaseSpec, QuadraticPhase,
                       canonical_map, canonical_transform, chirp_phase,
                       decay_fit, discretize_chi, gabor_matrix,
                       gabor_matrix_quadratic_stft, gaussian_bump_symbol,
                       identity_phase, multiplier_symbol, tameness_check,
                       unit_symbol)
from tflab.gabor import GaborSystem
from tflab.lattices import build_lattice
from tflab.matclass import LatticeMatrix
from tflab.signals import SampledSignal, fourier, gaussian_window, \
    random_concentrated_signal
from tflab.fio import SymbolSpec


# ---------------------------------------------------------------------------
# phases and tameness


def test_quadratic_validation():
    with pytest.raises(ValueError):
        QuadraticPhase(B=[[0.0]])               # degenerate B
    with pytest.raises(ValueError):
        QuadraticPhase(A=np.array([[1.0, 2.0], [0.0, 1.0]]), d=2)  # not symmetric


def test_gradients_match_finite_differences():
    ph = QuadraticPhase(A=[[0.8]], B=[[1.2]], C=[[-0.4]], x0=[0.1], eta0=[-0.3])
    x = np.array([[0.7], [-1.1]])
    eta = np.array([[0.2], [0.9]])
    h = 1e-6
    fd = (ph.phi(x + h, eta) - ph.phi(x - h, eta)) / (2 * h)
    assert np.allclose(ph.grad_x(x, eta)[:, 0], fd, atol=1e-6)
    fd_eta = (ph.phi(x, eta + h) - ph.phi(x, eta - h)) / (2 * h)
    assert np.allclose(ph.grad_eta(x, eta)[:, 0], fd_eta, atol=1e-6)


def test_tameness_identity_phase():
    rep = tameness_check(identity_phase(), radius=3.0, n=5)
    assert rep.sup_order2 == pytest.approx(1.0, abs=1e-6)
    assert rep.sup_order3 < 1e-5
    assert rep.min_mixed_det == pytest.approx(1.0, abs=1e-6)
    assert rep.phase3_sup < 1e-9
    assert not rep.phase3_growing
    assert rep.nondegenerate
    assert rep.gradient_consistency_err < 1e-5


def test_tameness_chirp_mixed_condition_grows():
    rep = tameness_check(chirp_phase(), radius=4.0, n=5)
    assert rep.phase3_growing
    assert rep.phase3_sup == pytest.approx(8.0, rel=1e-6)  # sup |x - x'| over the box


def test_tameness_a_zero_quadratic():
    rep = tameness_check(QuadraticPhase(B=[[1.0]], C=[[0.5]]), radius=4.0, n=5)
    assert rep.phase3_sup < 1e-9


# ---------------------------------------------------------------------------
# operator application


def test_identity_fio_is_identity(gauss, rng):
    f = random_concentrated_signal(1, gauss.L, gauss.N, rng)
    out = FIOOperator(unit_symbol(), identity_phase(), gauss).apply(f)
    assert np.max(np.abs(out.data - f.data)) < 1e-8


def test_multiplier_fio_matches_fourier_route(gauss, rng):
    mult = lambda eta: np.exp(-np.pi * np.sum(eta ** 2, axis=-1) / 4)
    sym = multiplier_symbol(mult)
    f = random_concentrated_signal(1, gauss.L, gauss.N, rng)
    out = FIOOperator(sym, identity_phase(), gauss).apply(f)
    # oracle: multiply the transform and invert
    F = fourier(f)
    F.data *= mult(F.axis_positions()[:, None])
    ref = fourier(F, inverse=True)
    assert np.max(np.abs(out.data - ref.data)) < 1e-8


def test_chirp_fio_closed_form(gauss, rng):
    f = random_concentrated_signal(1, gauss.L, gauss.N, rng)
    out = FIOOperator(unit_symbol(), chirp_phase(), gauss).apply(f)
    t = gauss.axis_positions()
    ref = np.exp(1j * np.pi * t ** 2) * f.data
    assert np.max(np.abs(out.data - ref)) < 1e-6


def test_batch_apply_matches_single(gauss, rng):
    op = FIOOperator(gaussian_bump_symbol(), chirp_phase(), gauss)
    sigs = np.stack([random_concentrated_signal(1, gauss.L, gauss.N, rng).data
                     for _ in range(3)])
    batch = op.apply_batch(sigs)
    for k in range(3):
        single = op.apply(SampledSignal(1, gauss.L, gauss.N, sigs[k]))
        assert np.max(np.abs(batch[k] - single.data)) < 1e-12


# ---------------------------------------------------------------------------
# canonical transformation


def test_identity_map():
    x, xi = canonical_transform(identity_phase(), [1.3], [-0.4])
    assert np.allclose(x, [1.3])
    assert np.allclose(xi, [-0.4])


def test_chirp_map_exact():
    # the canonical transformation of the chirp phase is (y, eta) -> (y, y + eta)
    x, xi = canonical_transform(chirp_phase(), [1.5], [0.5])
    assert np.allclose(x, [1.5])
    assert np.allclose(xi, [2.0])


def test_b_c_identity_a_zero():
    ph = QuadraticPhase(B=[[1.0]], C=[[1.0]])
    x, xi = canonical_transform(ph, [2.0], [0.5])
    assert np.allclose(x, [1.5])       # x = B^{-1}(y - C eta)
    assert np.allclose(xi, [0.5])      # xi = B eta


def test_newton_matches_closed_form(rng):
    quad = QuadraticPhase(A=[[0.6]], B=[[1.1]], C=[[-0.3]], x0=[0.2], eta0=[0.4])
    general = PhaseSpec(phi=quad.phi, grad_x=quad._grad_x,
                        grad_eta=quad._grad_eta, mixed_hessian=quad._mixed, d=1)
    for _ in range(100):
        y = rng.uniform(-4, 4, size=1)
        eta = rng.uniform(-4, 4, size=1)
        xq, xiq = quad.map_closed_form(y, eta)
        xn, xin = canonical_transform(general, y, eta)
        assert np.max(np.abs(xq - xn)) < 1e-10
        assert np.max(np.abs(xiq - xin)) < 1e-10
        # defining system residual
        assert np.max(np.abs(general.grad_eta(xn, eta) - y)) < 1e-10


def test_newton_with_fd_gradients():
    quad = QuadraticPhase(A=[[0.5]], B=[[1.0]])
    fd_phase = PhaseSpec(phi=quad.phi, d=1)
    assert fd_phase.fd_gradients
    x, xi = canonical_transform(fd_phase, [1.0], [0.5], tol=1e-8)
    xq, xiq = quad.map_closed_form(np.array([1.0]), np.array([0.5]))
    assert np.max(np.abs(x - xq)) < 1e-6


def test_newton_divergence_reported():
    # grad_eta bounded: y outside its range is unreachable
    bad = PhaseSpec(phi=lambda x, eta: np.tanh(np.sum(x * eta, axis=-1)), d=1)
    with pytest.raises(NonconvergenceError):
        canonical_transform(bad, [5.0], [0.1])


# ---------------------------------------------------------------------------
# lattice discretization


def test_discretize_identity_map():
    lat = build_lattice(1, 1, 1, 3)
    dm = discretize_chi(canonical_map(identity_phase()), lat)
    assert np.array_equal(dm.table.image_coords, lat.coords)
    assert np.max(np.abs(dm.remainders)) == 0
    assert dm.fiber == 1 and dm.stable_fibers


def test_discretize_lattice_preserving_shear():
    lat = build_lattice(1, 1, 1, 3)
    dm = discretize_chi(canonical_map(chirp_phase()), lat)
    # chi(y, eta) = (y, y + eta) preserves the integer lattice: zero remainder
    assert np.max(np.abs(dm.remainders)) == 0
    expect = np.stack([lat.coords[:, 0], lat.coords[:, 0] + lat.coords[:, 1]], axis=1)
    assert np.array_equal(dm.table.image_coords, expect)


def test_discretize_offset_map():
    lat = build_lattice(1, 1, 1, 2)
    ph = QuadraticPhase(B=[[1.0]], x0=[0.3])    # chi = (y + 0.3, eta)
    dm = discretize_chi(canonical_map(ph), lat)
    assert np.array_equal(dm.table.image_coords, lat.coords)
    assert np.allclose(dm.remainders[:, 0], 0.3)
    assert np.allclose(dm.remainders[:, 1], 0.0)


def test_remainders_stay_in_half_open_cell(lattice_half):
    ph = QuadraticPhase(A=[[0.3]], B=[[1.2]], C=[[0.2]], x0=[0.17], eta0=[-0.4])
    dm = discretize_chi(canonical_map(ph), lattice_half)
    steps = lattice_half.base.steps
    assert np.all(dm.remainders >= -steps / 2)
    assert np.all(dm.remainders < steps / 2)


# ---------------------------------------------------------------------------
# Gabor matrices and decay


@pytest.fixture(scope="module")
def small_system():
    g = gaussian_window(1, 16.0, 256)
    return GaborSystem(g, build_lattice(0.5, 0.5, 1, 2.0))


def test_zero_operator_gives_zero_matrix(small_system):
    class Zero:
        def apply(self, f):
            return SampledSignal(f.d, f.L, f.N, np.zeros_like(f.data))

    M = gabor_matrix(Zero(), small_system)
    assert np.all(M.entries == 0)


def test_identity_matrix_is_gram(small_system, gauss):
    op = FIOOperator(unit_symbol(), identity_phase(), gauss)
    M = gabor_matrix(op, small_system)
    lat = small_system.lattice
    # oracle: |Gram| entries are the Gaussian STFT magnitudes
    for i in (0, 7, 12):
        for j in (3, 12, 20):
            diff = lat.points[j] - lat.points[i]
            ref = np.exp(-np.pi * np.sum(diff ** 2) / 2)
            assert abs(abs(M.entries[i, j]) - ref) < 1e-8


def test_two_path_agreement_including_complex_symbol(small_system, gauss):
    # complex asymmetric symbol pins the window convention of the STFT route
    def ev(x, eta):
        z1 = x[..., 0]
        z2 = eta[..., 0]
        return np.exp(-np.pi * ((z1 - 0.5) ** 2 + 0.7 * z2 ** 2)) * \
            np.exp(1j * np.pi * (0.3 * z1 + 0.1 * z1 * z2))

    sym = SymbolSpec(evaluator=ev)
    for phase in (identity_phase(), chirp_phase(),
                  QuadraticPhase(A=[[0.4]], B=[[1.0]], C=[[0.6]])):
        M1 = gabor_matrix(FIOOperator(sym, phase, gauss), small_system)
        M2 = gabor_matrix_quadratic_stft(sym, phase, small_system)
        ref = np.abs(M1.entries)
        mask = ref >= 1e-8
        dev = np.max(np.abs(ref[mask] - M2.entries[mask].real) / ref[mask])
        assert dev < 1e-3


def test_stft_route_rejects_general_phase(small_system):
    general = PhaseSpec(phi=lambda x, eta: np.sum(x * eta, axis=-1), d=1)
    with pytest.raises(ValueError):
        gabor_matrix_quadratic_stft(unit_symbol(), general, small_system)


def test_chirp_matrix_concentrates_on_graph(system, gauss):
    op = FIOOperator(unit_symbol(), chirp_phase(), gauss)
    M = gabor_matrix(op, system)
    chi = canonical_map(chirp_phase())
    lat = system.lattice
    mapped = chi.points(lat.points)
    for j in (110, 220, 330):
        col = np.abs(M.entries[:, j])
        peak = lat.points[np.argmax(col)]
        assert np.linalg.norm(peak - mapped[j]) <= 1.0


def test_decay_fit_superpolynomial_growth(system, gauss):
    # Gaussian-window identity operator: fitted slope grows with the range
    op = FIOOperator(unit_symbol(), identity_phase(), gauss)
    M = gabor_matrix(op, system)
    chi = canonical_map(identity_phase())
    near = decay_fit(M, chi, max_distance=3.0)
    far = decay_fit(M, chi, max_distance=6.0)
    assert far.s > near.s + 1
    assert near.envelope_monotone and far.envelope_monotone


def test_decay_fit_reports_declared_order_constant(system, gauss):
    op = FIOOperator(gaussian_bump_symbol(), chirp_phase(), gauss)
    M = gabor_matrix(op, system)
    fit = decay_fit(M, canonical_map(chirp_phase()))
    # envelope bounded by c_bound <.>^{-s} by construction; c_bound finite
    assert np.isfinite(fit.c_bound)
    dist = fit.envelope[:, 0]
    assert np.all(fit.envelope[:, 1] <= fit.c_bound * dist ** (-fit.s) + 1e-15)


def test_decay_fit_insufficient_data(small_system):
    M = LatticeMatrix(small_system.lattice,
                      np.zeros((len(small_system.lattice),) * 2))
    with pytest.raises(InsufficientDataError):
        decay_fit(M, canonical_map(identity_phase()))
