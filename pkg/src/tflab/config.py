"""Shared numerical thresholds.

Every finite-scale verdict in the package (vanishing-tail tests, decay fits,
Parseval checks) is a threshold decision, and the thresholds live here so
reports can quote them instead of burying magic numbers in the kernels.
"""

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Thresholds:
    """Default tolerances and floors used across diagnostics.

    noise_floor: matrix entries below this are treated as numerical zero.
    fit_floor: entries below this are excluded from decay fits.
    c0_theta: tail/initial ratio under which a diagonal is tail-vanishing.
    c0_trend_ratio: alternative pass for slowly decaying diagonals whose
        tail profile is strictly decreasing and ends below this fraction.
    m0_theta: tail ratio for the vanishing-at-infinity profile of symbols.
    parseval_tol: relative frame-bound spread accepted as tight.
    core_margin: distance (in lattice units) trimmed from the truncation
        radius when estimating frame bounds, so boundary artifacts of the
        finite lattice section do not masquerade as frame collapse.
    admissible_offset_cap: largest offset-set cardinality accepted when
        splitting a lattice map into a fiber part plus bounded offsets.
    """

    noise_floor: float = 1e-12
    fit_floor: float = 1e-8
    c0_theta: float = 1e-3
    c0_trend_ratio: float = 0.5
    m0_theta: float = 1e-3
    parseval_tol: float = 1e-6
    core_margin: float = 2.5
    admissible_offset_cap: int = 9

    def to_dict(self):
        return asdict(self)


DEFAULT_THRESHOLDS = Thresholds()
