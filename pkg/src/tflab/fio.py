"""Fourier integral operators: phases, symbols, canonical transformations,
and the Gabor matrix by two independent routes.

An operator here acts as T f(x) = int e^{2 pi i Phi(x, eta)} sigma(x, eta)
fhat(eta) d eta, realized as a Riemann sum over the centered frequency
grid. The phase carries evaluators for its gradients and mixed Hessian;
quadratic phases

    Phi(x, eta) = (1/2) A x.x + B x.eta + (1/2) C eta.eta + eta0.x - x0.eta

additionally expose closed forms for everything, including the canonical
transformation chi(y, eta) = (x, xi) solving y = grad_eta Phi(x, eta),
xi = grad_x Phi(x, eta). For general tame phases chi is computed by Newton
iteration on the first equation.

The Gabor matrix M[mu, lam] = <T pi(lam) g, pi(mu) g> is assembled either
by operator quadrature (route one) or, for quadratic phases, from samples
of a single phase-space STFT (route two): with z0 = (mu_1, lam_2),

    |M[mu, lam]| = |V_W sigma(z0, zeta)|,
    zeta = (mu_2 - grad_x Phi(z0), lam_1 - grad_eta Phi(z0)),
    W(w) = exp(-2 pi i Phi_2(w)) g(w_1) conj(ghat(w_2)),

where Phi_2(w) = (1/2) <H w, w> is the quadratic Taylor remainder of the
phase (H its full Hessian). The window W above is the one that makes the
two routes agree identically for complex symbols with the standard STFT
convention; the package's two-path tests pin this down numerically.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from tflab.config import DEFAULT_THRESHOLDS, Thresholds
from tflab.gabor import GaborSystem
from tflab.lattices import FundamentalDomain, LatticeMap, TruncatedLattice, fiber_bound
from tflab.matclass import LatticeMatrix
from tflab.signals import SampledSignal, fourier


class NonconvergenceError(RuntimeError):
    """Newton iteration for the canonical transformation diverged."""


class InsufficientDataError(RuntimeError):
    """Too few usable matrix entries for a decay fit."""


# ---------------------------------------------------------------------------
# phases


@dataclass
class PhaseSpec:
    """A tame phase given through evaluators.

    All evaluators take (x, eta) as (..., d) arrays. grad_x and grad_eta
    return (..., d); mixed_hessian returns (..., d, d) with entry (i, j) =
    d^2 Phi / dx_i deta_j. Missing gradient evaluators are replaced by
    central finite differences of phi (flagged lower accuracy via
    fd_gradients). Declared bounds are used by tameness_check verdicts.
    """

    phi: Callable
    grad_x: Optional[Callable] = None
    grad_eta: Optional[Callable] = None
    mixed_hessian: Optional[Callable] = None
    d: int = 1
    declared_c2: Optional[float] = None
    declared_c3: Optional[float] = None
    delta: float = 1e-8
    fd_gradients: bool = field(default=False, init=False)

    def __post_init__(self):
        h = 1e-5
        if self.grad_x is None:
            self.fd_gradients = True
            self.grad_x = _fd_gradient(self.phi, slot=0, d=self.d, h=h)
        if self.grad_eta is None:
            self.fd_gradients = True
            self.grad_eta = _fd_gradient(self.phi, slot=1, d=self.d, h=h)
        if self.mixed_hessian is None:
            self.mixed_hessian = _fd_jacobian(self.grad_x, slot=1, d=self.d, h=h)


def _fd_gradient(phi, slot, d, h):
    def grad(x, eta):
        x = np.asarray(x, dtype=float)
        eta = np.asarray(eta, dtype=float)
        out = np.empty(np.broadcast(x, eta).shape[:-1] + (d,))
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            if slot == 0:
                out[..., i] = (phi(x + e, eta) - phi(x - e, eta)) / (2 * h)
            else:
                out[..., i] = (phi(x, eta + e) - phi(x, eta - e)) / (2 * h)
        return out

    return grad


def _fd_jacobian(grad, slot, d, h):
    def hess(x, eta):
        x = np.asarray(x, dtype=float)
        eta = np.asarray(eta, dtype=float)
        out = np.empty(np.broadcast(x, eta).shape[:-1] + (d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            if slot == 1:
                diff = (grad(x, eta + e) - grad(x, eta - e)) / (2 * h)
            else:
                diff = (grad(x + e, eta) - grad(x - e, eta)) / (2 * h)
            out[..., :, j] = diff
        return out

    return hess


class QuadraticPhase(PhaseSpec):
    """Quadratic phase with symmetric A, C and nondegenerate symmetric B."""

    def __init__(self, A=None, B=None, C=None, x0=None, eta0=None, d: int = 1):
        self.A = _sym_mat(A, d, "A")
        self.B = _sym_mat(B if B is not None else np.eye(d), d, "B")
        self.C = _sym_mat(C, d, "C")
        if abs(np.linalg.det(self.B)) < 1e-12:
            raise ValueError("B must be nondegenerate")
        self.x0 = _vec(x0, d)
        self.eta0 = _vec(eta0, d)
        super().__init__(phi=self._phi, grad_x=self._grad_x,
                         grad_eta=self._grad_eta, mixed_hessian=self._mixed,
                         d=d, declared_c2=self._c2_bound(), declared_c3=0.0,
                         delta=abs(np.linalg.det(self.B)))

    def _c2_bound(self):
        return float(max(np.max(np.abs(self.A)), np.max(np.abs(self.B)),
                         np.max(np.abs(self.C))))

    def _phi(self, x, eta):
        x = np.asarray(x, dtype=float)
        eta = np.asarray(eta, dtype=float)
        qa = 0.5 * np.einsum("...i,ij,...j->...", x, self.A, x)
        qb = np.einsum("...i,ij,...j->...", x, self.B, eta)
        qc = 0.5 * np.einsum("...i,ij,...j->...", eta, self.C, eta)
        return qa + qb + qc + x @ self.eta0 - eta @ self.x0

    def _grad_x(self, x, eta):
        return np.asarray(x) @ self.A + np.asarray(eta) @ self.B + self.eta0

    def _grad_eta(self, x, eta):
        return np.asarray(x) @ self.B + np.asarray(eta) @ self.C - self.x0

    def _mixed(self, x, eta):
        shape = np.broadcast(np.asarray(x), np.asarray(eta)).shape[:-1]
        return np.broadcast_to(self.B, shape + self.B.shape).copy()

    def full_hessian(self) -> np.ndarray:
        top = np.hstack([self.A, self.B])
        bot = np.hstack([self.B, self.C])
        return np.vstack([top, bot])

    def taylor_remainder(self, w: np.ndarray) -> np.ndarray:
        """Phi_2(w) = (1/2) <H w, w> on (..., 2d) points."""
        H = self.full_hessian()
        w = np.asarray(w, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", w, H, w)

    def map_closed_form(self, y: np.ndarray, eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """chi(y, eta) = (x, xi) in closed form, vectorized."""
        y = np.asarray(y, dtype=float)
        eta = np.asarray(eta, dtype=float)
        rhs = y - eta @ self.C + self.x0
        x = np.linalg.solve(self.B, rhs[..., None])[..., 0]
        xi = x @ self.A + eta @ self.B + self.eta0
        return x, xi


def _sym_mat(M, d, name):
    if M is None:
        return np.zeros((d, d))
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape != (d, d) or not np.allclose(M, M.T, atol=1e-12):
        raise ValueError(f"{name} must be a symmetric {d}x{d} matrix")
    return M


def _vec(v, d):
    if v is None:
        return np.zeros(d)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (d,):
        raise ValueError(f"vector must have length {d}")
    return v


def identity_phase(d: int = 1) -> QuadraticPhase:
    """Phi = x.eta, the pseudodifferential case."""
    return QuadraticPhase(d=d)


def chirp_phase(d: int = 1) -> QuadraticPhase:
    """Phi = x.eta + |x|^2/2, whose map is (y, eta) -> (y, y + eta)."""
    return QuadraticPhase(A=np.eye(d), d=d)


# ---------------------------------------------------------------------------
# symbols


@dataclass
class SymbolSpec:
    """An operator symbol with an evaluator sigma(x, eta) on (..., d) pairs.

    derivative_order optionally declares up to which order 2N bounded
    derivatives are claimed; s0 declares a polynomial STFT-decay exponent.
    Both are report-only metadata used by decay diagnostics.
    """

    evaluator: Callable
    derivative_order: Optional[int] = None
    s0: Optional[float] = None

    def __call__(self, x, eta):
        return np.asarray(self.evaluator(np.asarray(x, dtype=float),
                                         np.asarray(eta, dtype=float)))


def unit_symbol() -> SymbolSpec:
    return SymbolSpec(evaluator=lambda x, eta: np.ones(np.broadcast(x, eta).shape[:-1], dtype=complex))


def gaussian_bump_symbol(center=None, width: float = 1.0, d: int = 1) -> SymbolSpec:
    """exp(-pi |z - z0|^2 / width^2) on phase space, z = (x, eta)."""
    z0 = np.zeros(2 * d) if center is None else np.asarray(center, dtype=float)

    def ev(x, eta):
        z = np.concatenate(np.broadcast_arrays(x, eta), axis=-1)
        return np.exp(-np.pi * np.sum((z - z0) ** 2, axis=-1) / width ** 2).astype(complex)

    return SymbolSpec(evaluator=ev)


def multiplier_symbol(fun: Callable, d: int = 1) -> SymbolSpec:
    """A frequency-only symbol sigma(x, eta) = fun(eta)."""

    def ev(x, eta):
        out = np.asarray(fun(eta))
        return np.broadcast_to(out, np.broadcast(x, eta).shape[:-1]).astype(complex)

    return SymbolSpec(evaluator=ev)


def smoothed_indicator_symbol(radius: float = 2.0, smoothing: float = 1.0,
                              d: int = 1) -> SymbolSpec:
    """Indicator of the centered phase-space box mollified by a Gaussian.

    Per coordinate: (1_{[-radius, radius]} * gaussian)(u) with smoothing
    width w, i.e. (erf((u + radius)/w) - erf((u - radius)/w)) / 2. The
    Gaussian mollifier keeps the operator kernel tails at Gaussian decay,
    which is what lets finite-window tail diagnostics see the decay at all.
    """
    from scipy.special import erf

    def ev(x, eta):
        z = np.concatenate(np.broadcast_arrays(x, eta), axis=-1)
        per_axis = 0.5 * (erf((z + radius) / smoothing) - erf((z - radius) / smoothing))
        return np.prod(per_axis, axis=-1).astype(complex)

    return SymbolSpec(evaluator=ev)


# ---------------------------------------------------------------------------
# tameness


@dataclass
class TamenessReport:
    sup_order2: float
    sup_order3: float
    min_mixed_det: float
    phase3_sup: float
    phase3_half_region_sup: float
    gradient_consistency_err: float
    order2_ok: Optional[bool]
    order3_ok: Optional[bool]
    nondegenerate: bool

    @property
    def phase3_growing(self) -> bool:
        """Heuristic: the mixed-norm condition looks violated when the sup
        keeps growing with the sampled region."""
        base = max(self.phase3_half_region_sup, 1e-12)
        return self.phase3_sup > 1.5 * base and self.phase3_sup > 1e-6


def tameness_check(phase: PhaseSpec, radius: float = 4.0, n: int = 7,
                   fd_step: float = 1e-4) -> TamenessReport:
    """Sampled derivative bounds, nondegeneracy, and the mixed-norm condition.

    Report-only: second and third derivative sups come from central
    differences of the gradient evaluators on an (x, eta) product sample of
    n points per axis inside the given radius.
    """
    d = phase.d
    axis = np.linspace(-radius, radius, n)
    grids = np.meshgrid(*([axis] * (2 * d)), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    x, eta = pts[:, :d], pts[:, d:]

    grad_fd = _fd_gradient(phase.phi, slot=0, d=d, h=fd_step)
    gx = phase.grad_x(x, eta)
    gerr = np.max(np.abs(gx - grad_fd(x, eta))) / max(np.max(np.abs(gx)), 1.0)

    hxx = _fd_jacobian(phase.grad_x, slot=0, d=d, h=fd_step)(x, eta)
    hxe = phase.mixed_hessian(x, eta)
    hee = _fd_jacobian(phase.grad_eta, slot=1, d=d, h=fd_step)(x, eta)
    sup2 = float(max(np.max(np.abs(hxx)), np.max(np.abs(hxe)), np.max(np.abs(hee))))
    dets = np.abs(np.linalg.det(hxe))
    min_det = float(np.min(dets))

    def hess_all(xx, ee):
        return np.concatenate([
            _fd_jacobian(phase.grad_x, slot=0, d=d, h=fd_step)(xx, ee).reshape(len(xx), -1),
            phase.mixed_hessian(xx, ee).reshape(len(xx), -1),
            _fd_jacobian(phase.grad_eta, slot=1, d=d, h=fd_step)(xx, ee).reshape(len(xx), -1),
        ], axis=1)

    sup3 = 0.0
    base = hess_all(x, eta)
    for i in range(2 * d):
        e = np.zeros(2 * d)
        e[i] = fd_step
        shifted = hess_all(x + e[:d], eta + e[d:])
        shifted_m = hess_all(x - e[:d], eta - e[d:])
        sup3 = max(sup3, float(np.max(np.abs(shifted - shifted_m) / (2 * fd_step))))

    def phase3(sub_radius):
        ax = np.linspace(-sub_radius, sub_radius, n)
        gr = np.meshgrid(*([ax] * d), indexing="ij")
        xs = np.stack([g.ravel() for g in gr], axis=1)
        worst = 0.0
        for ee in xs[:: max(1, len(xs) // n)]:
            g_all = phase.grad_x(xs, np.broadcast_to(ee, xs.shape))
            diam = np.max(np.linalg.norm(g_all[:, None, :] - g_all[None, :, :], axis=-1))
            worst = max(worst, float(diam))
        return worst

    p3_full = phase3(radius)
    p3_half = phase3(radius / 2.0)

    return TamenessReport(
        sup_order2=sup2,
        sup_order3=sup3,
        min_mixed_det=min_det,
        phase3_sup=p3_full,
        phase3_half_region_sup=p3_half,
        gradient_consistency_err=float(gerr),
        order2_ok=None if phase.declared_c2 is None else sup2 <= phase.declared_c2 + 1e-6,
        order3_ok=None if phase.declared_c3 is None else sup3 <= phase.declared_c3 + 1e-3,
        nondegenerate=min_det >= phase.delta * (1 - 1e-9),
    )


# ---------------------------------------------------------------------------
# operator application


class FIOOperator:
    """Precomputed quadrature kernel for one (symbol, phase, grid) triple.

    apply realizes T f(x) = sum_k exp(2 pi i Phi(x, w_k)) sigma(x, w_k)
    fhat(w_k) dw on the grid of the template signal.
    """

    def __init__(self, symbol: SymbolSpec, phase: PhaseSpec, template: SampledSignal):
        if template.d != phase.d:
            raise ValueError("phase dimension does not match the grid")
        self.template = template
        d = template.d
        t = template.axis_positions()
        w = template.axis_frequencies()
        pos = np.stack([g.ravel() for g in np.meshgrid(*([t] * d), indexing="ij")], axis=1)
        frq = np.stack([g.ravel() for g in np.meshgrid(*([w] * d), indexing="ij")], axis=1)
        x = pos[:, None, :]
        eta = frq[None, :, :]
        vals = symbol(x, eta) * np.exp(2j * np.pi * phase.phi(x, eta))
        if not np.all(np.isfinite(vals)):
            raise ValueError("symbol or phase not evaluable on the grid")
        self.kernel = vals * template.dual_spacing ** d

    def apply(self, f: SampledSignal) -> SampledSignal:
        fh = fourier(f).data.ravel()
        out = self.kernel @ fh
        return SampledSignal(f.d, f.L, f.N, out)

    def apply_batch(self, flat_signals: np.ndarray) -> np.ndarray:
        """Rows are flattened signals on the template grid."""
        n, d, L = self.template.N, self.template.d, self.template.L
        scale = (L / n) ** d
        shape = (len(flat_signals),) + (n,) * d
        axes = tuple(range(1, d + 1))
        F = scale * np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(
            flat_signals.reshape(shape), axes=axes), axes=axes), axes=axes)
        return (self.kernel @ F.reshape(len(flat_signals), -1).T).T


def apply_fio(symbol: SymbolSpec, phase: PhaseSpec, f: SampledSignal) -> SampledSignal:
    return FIOOperator(symbol, phase, f).apply(f)


# ---------------------------------------------------------------------------
# canonical transformation


@dataclass
class CanonicalMap:
    """The phase-space map chi(y, eta) = (x, xi) of a phase."""

    phase: PhaseSpec
    method: str
    lipschitz: Optional[float] = None

    def __call__(self, y, eta):
        return canonical_transform(self.phase, y, eta)

    def points(self, pts: np.ndarray) -> np.ndarray:
        """Map an (n, 2d) array of (y, eta) points to (n, 2d) (x, xi)."""
        d = self.phase.d
        if isinstance(self.phase, QuadraticPhase):
            x, xi = self.phase.map_closed_form(pts[:, :d], pts[:, d:])
            return np.concatenate([x, xi], axis=1)
        out = np.empty_like(pts, dtype=float)
        for i, p in enumerate(pts):
            x, xi = canonical_transform(self.phase, p[:d], p[d:])
            out[i, :d] = x
            out[i, d:] = xi
        return out


def canonical_map(phase: PhaseSpec) -> CanonicalMap:
    method = "closed-form-quadratic" if isinstance(phase, QuadraticPhase) else "newton"
    return CanonicalMap(phase=phase, method=method)


def canonical_transform(phase: PhaseSpec, y, eta, tol: float = 1e-10,
                        max_iter: int = 60) -> Tuple[np.ndarray, np.ndarray]:
    """Solve y = grad_eta Phi(x, eta) for x, then xi = grad_x Phi(x, eta).

    Quadratic phases use the closed form x = B^{-1}(y - C eta + x0),
    xi = A x + B eta + eta0. General phases run Newton started from the
    affine initializer built on the phase's averaged Hessian blocks, with
    plain x0 = y as fallback.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if isinstance(phase, QuadraticPhase):
        x, xi = phase.map_closed_form(y, eta)
        return x, xi

    x = _affine_initializer(phase, y, eta)
    trace: List[float] = []
    for _ in range(max_iter):
        F = phase.grad_eta(x, eta) - y
        res = float(np.max(np.abs(F)))
        trace.append(res)
        if res <= tol:
            return x, np.asarray(phase.grad_x(x, eta), dtype=float)
        J = np.asarray(phase.mixed_hessian(x, eta), dtype=float).T
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError as exc:
            raise NonconvergenceError(f"singular Jacobian at residual {res:.3e}") from exc
        x = x - step
    raise NonconvergenceError(
        f"Newton did not reach {tol:.1e} in {max_iter} steps; residual trace {trace[-5:]}")


def _affine_initializer(phase: PhaseSpec, y, eta):
    blocks = getattr(phase, "_avg_blocks", None)
    if blocks is None:
        d = phase.d
        axis = np.linspace(-2.0, 2.0, 5)
        grids = np.meshgrid(*([axis] * (2 * d)), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        xs, es = pts[:, :d], pts[:, d:]
        Bm = np.mean(phase.mixed_hessian(xs, es), axis=0)
        Cm = np.mean(_fd_jacobian(phase.grad_eta, slot=1, d=d, h=1e-4)(xs, es), axis=0)
        blocks = (Bm, Cm)
        phase._avg_blocks = blocks
    Bm, Cm = blocks
    try:
        return np.linalg.solve(Bm, y - eta @ Cm)
    except np.linalg.LinAlgError:
        return np.array(y, dtype=float, copy=True)


# ---------------------------------------------------------------------------
# lattice discretization of the map


@dataclass
class DiscretizedMap:
    """Lattice rounding of a canonical map: chi(lam) = remainder + point.

    table maps the truncation into the full lattice; remainders live in
    the half-open fundamental domain. The fiber bound is recomputed on the
    half-radius window to check it is stable under truncation growth.
    """

    table: LatticeMap
    remainders: np.ndarray
    fiber: int
    fiber_half_window: int

    @property
    def stable_fibers(self) -> bool:
        return self.fiber == self.fiber_half_window


def discretize_chi(chi: CanonicalMap, lattice: TruncatedLattice) -> DiscretizedMap:
    images = chi.points(lattice.points)
    dom = FundamentalDomain(lattice.base)
    coords, rem = dom.decompose(images)
    table = LatticeMap(lattice, coords)

    half = lattice.sup_norms() <= lattice.radius / 2.0
    sizes = {}
    for c in coords[half]:
        key = tuple(int(v) for v in c)
        sizes[key] = sizes.get(key, 0) + 1
    fiber_half = max(sizes.values()) if sizes else 0
    return DiscretizedMap(table=table, remainders=rem,
                          fiber=fiber_bound(table), fiber_half_window=fiber_half)


# ---------------------------------------------------------------------------
# Gabor matrices


def gabor_matrix(op, sys: GaborSystem) -> LatticeMatrix:
    """M[mu, lam] = <T pi(lam) g, pi(mu) g> by operator quadrature.

    op is any object with apply(SampledSignal); batch application through
    apply_batch is used when available. Assembly is a pair of matrix
    products, so the reduction order is deterministic.
    """
    W = sys.shifted_windows
    if hasattr(op, "apply_batch"):
        TW = op.apply_batch(W)
    else:
        w0 = sys.window
        TW = np.empty_like(W)
        for i in range(W.shape[0]):
            TW[i] = op.apply(SampledSignal(w0.d, w0.L, w0.N, W[i])).data.ravel()
    scale = sys.window.dx ** sys.window.d
    entries = scale * (TW @ np.conj(W).T).T
    return LatticeMatrix(sys.lattice, entries)


def gabor_matrix_quadratic_stft(symbol: SymbolSpec, phase: QuadraticPhase,
                                sys: GaborSystem) -> LatticeMatrix:
    """Modulus of the Gabor matrix from one phase-space STFT (quadratic phases).

    Builds the matched window W(w) = exp(-2 pi i Phi_2(w)) g(w_1) conj(ghat(w_2))
    once, then reads |V_W sigma| at the points dictated by the lattice and
    the phase gradients. Requires a self-dual grid and d = 1.
    """
    if not isinstance(phase, QuadraticPhase):
        raise ValueError("the STFT route supports quadratic phases only")
    g = sys.window
    if g.d != 1:
        raise NotImplementedError("STFT route is implemented for d = 1")
    if not g.is_self_dual():
        raise ValueError("STFT route needs a self-dual grid (N = L^2)")

    lat = sys.lattice
    n = g.N
    t = g.axis_positions()
    w = g.axis_frequencies()
    dx = g.dx

    sig = symbol(t[:, None, None], w[None, :, None])
    phi2 = phase.taylor_remainder(
        np.stack(np.broadcast_arrays(t[:, None], w[None, :]), axis=-1))
    ghat = fourier(g).data
    Wwin = np.exp(-2j * np.pi * phi2) * g.data[:, None] * np.conj(ghat)[None, :]

    time_vals = np.arange(-lat.na, lat.na + 1) * lat.base.alpha
    freq_vals = np.arange(-lat.nb, lat.nb + 1) * lat.base.beta
    nt, nf = len(time_vals), len(freq_vals)
    out = np.zeros((len(lat), len(lat)))

    for it, mu1 in enumerate(time_vals):
        s1 = int(round(mu1 / dx))
        for jf, lam2 in enumerate(freq_vals):
            s2 = int(round(lam2 * g.L))
            shifted = np.roll(np.roll(Wwin, s1, axis=0), s2, axis=1)
            h = sig * np.conj(shifted)
            gx = float(phase.grad_x(np.array([mu1]), np.array([lam2]))[0])
            ge = float(phase.grad_eta(np.array([mu1]), np.array([lam2]))[0])
            zeta1 = freq_vals - gx          # runs over mu_2
            zeta2 = time_vals - ge          # runs over lam_1
            E1 = np.exp(-2j * np.pi * np.outer(t, zeta1)) * dx
            E2 = np.exp(-2j * np.pi * np.outer(w, zeta2)) * g.dual_spacing
            V = np.abs(E1.T @ h @ E2)       # (mu_2 index, lam_1 index)
            rows = it * nf + np.arange(nf)
            cols = np.arange(nt) * nf + jf
            out[np.ix_(rows, cols)] = V
    return LatticeMatrix(lat, out.astype(complex))


# ---------------------------------------------------------------------------
# decay fitting


@dataclass
class DecayFit:
    """Least-squares fit |M| ~ C <chi(lam) - mu>^(-s) plus the raw envelope.

    c_bound is the smallest constant making the fitted power law an upper
    bound over every used entry. envelope rows are (bucket center, sup of
    |entries| in the bucket, fitted value at the center).
    """

    s: float
    c_fit: float
    c_bound: float
    envelope: np.ndarray
    n_entries: int

    @property
    def envelope_monotone(self) -> bool:
        sups = self.envelope[:, 1]
        return bool(np.all(np.diff(sups) <= 1e-12))


def graph_distances(matrix: LatticeMatrix, chi: CanonicalMap) -> np.ndarray:
    """<chi(lam) - mu> for every entry, rows mu, cols lam."""
    lat = matrix.lattice
    mapped = chi.points(lat.points)
    diff = mapped[None, :, :] - lat.points[:, None, :]
    return np.sqrt(1.0 + np.sum(diff * diff, axis=-1))


def decay_fit(matrix: LatticeMatrix, chi: CanonicalMap,
              thresholds: Thresholds = DEFAULT_THRESHOLDS,
              max_distance: Optional[float] = None) -> DecayFit:
    """Fit the off-graph decay exponent of a Gabor matrix.

    Entries below the fit floor are excluded (they are quadrature noise,
    not decay); fewer than 10 usable entries raise InsufficientDataError.
    """
    dist = graph_distances(matrix, chi)
    vals = np.abs(matrix.entries)
    mask = vals >= thresholds.fit_floor
    if max_distance is not None:
        mask &= dist <= max_distance
    if int(mask.sum()) < 10:
        raise InsufficientDataError(f"only {int(mask.sum())} entries above the fit floor")

    u = np.log(dist[mask])
    v = np.log(vals[mask])
    A = np.column_stack([np.ones_like(u), -u])
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    log_c, s = coef
    c_fit = float(np.exp(log_c))
    c_bound = float(np.max(vals[mask] * dist[mask] ** s))

    edges = np.arange(1.0, np.max(dist[mask]) + 1.0)
    rows = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = mask & (dist >= lo) & (dist < hi)
        if np.any(sel):
            center = 0.5 * (lo + hi)
            rows.append((center, float(np.max(vals[sel])),
                         c_fit * center ** (-s)))
    return DecayFit(s=float(s), c_fit=c_fit, c_bound=c_bound,
                    envelope=np.array(rows), n_entries=int(mask.sum()))
