"""Polynomial-type and moderate weights on R^N.

The polynomial family is v_s(r) = (1 + |r|^2)^(s/2). It is symmetric with
v_s(0) = 1 and submultiplicative up to the Peetre constant,
v_s(r + k) <= 2^(s/2) v_s(r) v_s(k); the plain inequality without the
constant fails already at r = k = (1, 0). A weight m is called v-moderate
with constant C_m when m(r + k) <= C_m m(r) v(k) for all r, k; since
closed forms for C_m are the exception, the constant is estimated by
sampling, and all boundedness certificates downstream consume the measured
value rather than assuming 1.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


def _as_points(r):
    """Coerce scalars/tuples/arrays to an (n, dim) float array plus a flag
    telling whether the input was a single point."""
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


@dataclass(frozen=True)
class WeightSpec:
    """A positive weight with an evaluator and optional moderate structure.

    kind is "polynomial" (with exponent s) or "tabulated" (arbitrary
    callable). For moderate weights, base holds the submultiplicative
    weight v and c_m the moderateness constant.
    """

    kind: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    s: Optional[float] = None
    base: Optional["WeightSpec"] = None
    c_m: float = 1.0

    def __call__(self, r):
        pts, single = _as_points(r)
        vals = np.asarray(self.evaluator(pts), dtype=float)
        if np.any(vals <= 0):
            raise ValueError("weight evaluated to a nonpositive value")
        return float(vals[0]) if single else vals


def polynomial_weight(s: float) -> WeightSpec:
    """The weight v_s(r) = (1 + |r|^2)^(s/2)."""
    if s < 0:
        raise ValueError(f"polynomial weight needs s >= 0, got {s}")

    def ev(pts):
        return (1.0 + np.sum(pts * pts, axis=-1)) ** (s / 2.0)

    return WeightSpec(kind="polynomial", evaluator=ev, s=s)


def constant_weight() -> WeightSpec:
    return WeightSpec(kind="tabulated", evaluator=lambda pts: np.ones(len(pts)))


def tabulated_weight(fun: Callable[[np.ndarray], np.ndarray]) -> WeightSpec:
    """Wrap an arbitrary positive evaluator acting on (n, dim) arrays."""
    return WeightSpec(kind="tabulated", evaluator=fun)


def weight_eval(w: WeightSpec, r) -> float:
    """Evaluate the weight at a single point."""
    return w(np.asarray(r, dtype=float))


@dataclass
class ModerateReport:
    """Sampled estimate of the moderateness constant C_m.

    estimate is max over sampled (r, k) of m(r+k) / (m(r) v(k)). stable is
    False when the estimate keeps growing across nested radius shells,
    which flags a weight that is likely not v-moderate at all.
    """

    estimate: float
    stable: bool
    shell_estimates: list = field(default_factory=list)


def moderate_constant_estimate(m, v: WeightSpec, sample: np.ndarray,
                               growth_factor: float = 1.25) -> ModerateReport:
    """Estimate C_m for a candidate v-moderate weight m on a point sample.

    m is any callable accepting (n, dim) arrays (a WeightSpec works). The
    sample is split into nested shells by radius; if the per-shell estimate
    keeps growing by more than growth_factor from one shell to the next,
    the report is flagged unstable.
    """
    pts = np.asarray(sample, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise ValueError("empty sample")

    m_vals = np.asarray(m(pts), dtype=float)
    if np.any(m_vals <= 0):
        raise ValueError("moderate weight must be positive on the sample")

    r = pts[:, None, :] + pts[None, :, :]
    m_sum = np.asarray(m(r.reshape(-1, pts.shape[1])), dtype=float).reshape(len(pts), len(pts))
    v_vals = v(pts)
    ratios = m_sum / (m_vals[:, None] * v_vals[None, :])
    estimate = float(np.max(ratios))

    radii = np.linalg.norm(pts, axis=1)
    order = np.argsort(radii)
    shells = np.array_split(order, min(4, len(pts)))
    shell_estimates = []
    covered = np.zeros(len(pts), dtype=bool)
    for shell in shells:
        covered[shell] = True
        sub = ratios[np.ix_(covered, covered)]
        shell_estimates.append(float(np.max(sub)))
    stable = True
    for a, b in zip(shell_estimates, shell_estimates[1:]):
        if b > growth_factor * max(a, 1e-300):
            stable = False
    return ModerateReport(estimate=estimate, stable=stable,
                          shell_estimates=shell_estimates)
