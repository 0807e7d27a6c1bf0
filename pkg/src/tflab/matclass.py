"""Matrices organized by map-relative diagonals, their weighted class norm,
boundedness checks, and finite-scale compactness diagnostics.

For a matrix A over the truncated lattice and a lattice self-map psi, the
relative diagonal at offset gamma is the sequence

    a^gamma[lam] = A[psi(lam) + gamma, lam],

and the class norm is sum_gamma v(gamma) * sup_lam |a^gamma[lam]|. The
matrix reassembles exactly as sum_gamma (translate by gamma) o (shifted
diagonal operator of a^gamma), which is both a structure theorem and the
internal consistency check used here.

Compactness of the associated operator is equivalent to every relative
diagonal vanishing at infinity. No finite computation decides that, so the
diagnostic inspects tail profiles t_gamma(R) = sup_{|lam| >= R} |a^gamma|
and passes a diagonal when the tail either drops below theta * initial or
decreases monotonically to below half its initial value across the window.
An independent oracle computes singular values of growing matrix sections
(conjugated by the weights so weighted-space action becomes plain l^2) and
classifies by the behavior of the smallest section singular value. The two
verdicts are compared, never merged.
"""

import struct
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from tflab.config import DEFAULT_THRESHOLDS, Thresholds
from tflab.lattices import LatticeMap, TruncatedLattice
from tflab.sequences import lp_norm, lpq_norm
from tflab.weights import WeightSpec

_MAGIC = b"TFMX"


class InternalConsistencyError(RuntimeError):
    """Diagonal reassembly failed to reproduce the matrix."""


class LatticeMatrix:
    """Dense complex matrix indexed by (mu, lam) in lattice enumeration."""

    def __init__(self, lattice: TruncatedLattice, entries: np.ndarray):
        entries = np.asarray(entries, dtype=complex)
        n = len(lattice)
        if entries.shape != (n, n):
            raise ValueError("entry block does not match the lattice size")
        self.lattice = lattice
        self.entries = entries

    @classmethod
    def identity(cls, lattice: TruncatedLattice) -> "LatticeMatrix":
        return cls(lattice, np.eye(len(lattice), dtype=complex))

    @classmethod
    def diagonal(cls, lattice: TruncatedLattice, values: np.ndarray) -> "LatticeMatrix":
        return cls(lattice, np.diag(np.asarray(values, dtype=complex)))

    def __matmul__(self, x):
        return self.entries @ x


@dataclass
class DiagonalStore:
    """Map-relative diagonals of a matrix: offset -> (values, presence mask).

    Offsets are integer lattice coordinates. Presence marks the lam for
    which psi(lam) + gamma landed inside the truncation; absent entries
    read as zero but are excluded from tail statistics.
    """

    lattice: TruncatedLattice
    psi: LatticeMap
    diagonals: Dict[tuple, np.ndarray]
    presence: Dict[tuple, np.ndarray]

    def sup_sequence(self) -> List[Tuple[tuple, float]]:
        """gamma -> sup |a^gamma|, sorted by |gamma| then lexicographically."""
        items = [(g, float(np.max(np.abs(v)))) for g, v in self.diagonals.items()]
        steps = self.lattice.base.steps
        items.sort(key=lambda kv: (np.max(np.abs(np.array(kv[0]) * steps)), kv[0]))
        return items


def relative_diagonal(A: LatticeMatrix, psi: LatticeMap, gamma) -> np.ndarray:
    """The sequence lam -> A[psi(lam) + gamma, lam] (zeros where absent)."""
    gamma = np.asarray(gamma, dtype=int)
    rows = A.lattice.indices_of(psi.image_coords + gamma)
    vals = np.zeros(len(A.lattice), dtype=complex)
    ok = rows >= 0
    vals[ok] = A.entries[rows[ok], np.arange(len(A.lattice))[ok]]
    return vals


def diagonal_decompose(A: LatticeMatrix, psi: LatticeMap,
                       check_tol: float = 1e-12,
                       prune_floor: float = 0.0) -> DiagonalStore:
    """Extract the relative diagonals of a dense matrix and verify reassembly.

    Every entry (mu, lam) lands in exactly one offset gamma = mu - psi(lam),
    so the extraction is a single scatter. Diagonals whose sup norm falls
    below prune_floor * max|A| are dropped (0 keeps everything); the
    reassembly check tolerance covers whatever was pruned.
    """
    lat = A.lattice
    n = len(lat)
    diffs = (lat.coords[:, None, :] - psi.image_coords[None, :, :]).reshape(n * n, -1)
    uniq, inverse = np.unique(diffs, axis=0, return_inverse=True)
    k_count = len(uniq)
    cols_flat = np.tile(np.arange(n), n)            # ravel order: mu major

    vals = np.zeros((k_count, n), dtype=complex)
    pres = np.zeros((k_count, n), dtype=bool)
    vals[inverse, cols_flat] = A.entries.ravel()
    pres[inverse, cols_flat] = True

    scale = float(np.max(np.abs(A.entries))) if A.entries.size else 0.0
    floor = prune_floor * scale
    sups = np.max(np.abs(vals), axis=1)
    diagonals: Dict[tuple, np.ndarray] = {}
    presence: Dict[tuple, np.ndarray] = {}
    for k in range(k_count):
        if sups[k] > floor or (prune_floor == 0.0 and np.any(pres[k])):
            key = tuple(int(v) for v in uniq[k])
            diagonals[key] = vals[k]
            presence[key] = pres[k]
    store = DiagonalStore(lattice=lat, psi=psi, diagonals=diagonals, presence=presence)

    rebuilt = reassemble(store)
    err = float(np.max(np.abs(rebuilt.entries - A.entries)))
    if err > check_tol * max(1.0, scale):
        raise InternalConsistencyError(f"reassembly error {err:.3e}")
    return store


def reassemble(store: DiagonalStore) -> LatticeMatrix:
    """sum_gamma (translation by gamma) o (shifted diagonal of a^gamma)."""
    lat = store.lattice
    n = len(lat)
    out = np.zeros((n, n), dtype=complex)
    cols = np.arange(n)
    for g, vals in store.diagonals.items():
        rows = lat.indices_of(store.psi.image_coords + np.asarray(g, dtype=int))
        ok = (rows >= 0) & store.presence[g]
        out[rows[ok], cols[ok]] = vals[ok]
    return LatticeMatrix(lat, out)


@dataclass
class ClassReport:
    """Weighted class norm: per-offset contributions and the total."""

    per_gamma: List[Tuple[tuple, float]]
    total: float
    tail_estimate: float

    def phi(self) -> Dict[tuple, float]:
        return dict(self.per_gamma)


def class_norm(A, v: WeightSpec, psi: Optional[LatticeMap] = None) -> ClassReport:
    """sum_gamma v(gamma) sup_lam |a^gamma[lam]| over the stored window.

    Accepts a LatticeMatrix together with psi, or a ready DiagonalStore.
    The tail estimate sums the contributions of the outermost shell of
    stored offsets (within one lattice step of the largest |gamma|).
    """
    if isinstance(A, DiagonalStore):
        store = A
    else:
        if psi is None:
            raise ValueError("psi is required when passing a dense matrix")
        store = diagonal_decompose(A, psi)

    steps = store.lattice.base.steps
    per = []
    for g, vals in store.diagonals.items():
        pt = np.asarray(g) * steps
        per.append((g, float(v(pt) * np.max(np.abs(vals)))))
    per.sort(key=lambda kv: (float(np.max(np.abs(np.array(kv[0]) * steps))), kv[0]))
    total = float(sum(p for _, p in per))

    if per:
        radii = np.array([np.max(np.abs(np.array(g) * steps)) for g, _ in per])
        shell = radii >= radii.max() - float(np.max(steps))
        tail = float(sum(p for (_, p), s in zip(per, shell) if s))
    else:
        tail = 0.0
    return ClassReport(per_gamma=per, total=total, tail_estimate=tail)


def apply_shifted_diag(psi: LatticeMap, a: np.ndarray, x: np.ndarray,
                       transpose: bool = False) -> np.ndarray:
    """The shifted diagonal operator of the sequence a along psi.

    Forward mode sends x to y with y[gam] = sum_{psi(lam)=gam} a[lam] x[lam]
    (zero when gam is not in the image); transpose mode returns
    (a[lam] x[psi(lam)])_lam with out-of-window reads as zero.
    """
    a = np.asarray(a)
    x = np.asarray(x)
    n = len(psi.lattice)
    if transpose:
        y = np.zeros(n, dtype=np.result_type(a, x))
        ok = psi.image_indices >= 0
        y[ok] = a[ok] * x[psi.image_indices[ok]]
        return y
    y = np.zeros(n, dtype=np.result_type(a, x))
    ok = psi.image_indices >= 0
    np.add.at(y, psi.image_indices[ok], (a * x)[ok])
    return y


def i_psi(psi: LatticeMap, x: np.ndarray) -> np.ndarray:
    """Shifted diagonal with constant coefficient one."""
    return apply_shifted_diag(psi, np.ones(len(psi.lattice)), x)


def j_psi(psi: LatticeMap, x: np.ndarray) -> np.ndarray:
    """The transpose of i_psi: (x[psi(lam)])_lam."""
    return apply_shifted_diag(psi, np.ones(len(psi.lattice)), x, transpose=True)


def apply_matrix(A: LatticeMatrix, x: np.ndarray, p, m_in=None, m_out=None,
                 q=None) -> Tuple[np.ndarray, float]:
    """Apply the matrix and report the weighted norm ratio out/in.

    m_in, m_out are weight tables or callables on lattice points; with q
    given the mixed (p, q) norm is used on both sides.
    """
    y = A.entries @ np.asarray(x, dtype=complex)
    lat = A.lattice
    if q is None:
        num = lp_norm(lat, y, p, m_out)
        den = lp_norm(lat, x, p, m_in)
    else:
        num = lpq_norm(lat, y, p, q, m_out)
        den = lpq_norm(lat, x, p, q, m_in)
    ratio = num / den if den > 0 else np.inf
    return y, float(ratio)


# ---------------------------------------------------------------------------
# compactness diagnostics


@dataclass
class GammaTail:
    gamma: tuple
    phi: float
    tails: List[float]
    passed: bool
    branch: str           # "threshold" | "trend" | "failed"


@dataclass
class CompactnessVerdict:
    per_gamma: List[GammaTail]
    radii: List[float]
    verdict: str          # "compact-consistent" | "non-compact"
    theta: float
    oracle: Optional["SectionOracleReport"] = None

    def to_dict(self) -> dict:
        doc = {
            "per_gamma": [
                {"gamma": list(g.gamma), "phi": g.phi, "tails": g.tails,
                 "pass": g.passed, "branch": g.branch}
                for g in self.per_gamma
            ],
            "radii": self.radii,
            "verdict": self.verdict,
            "theta": self.theta,
            "oracle": self.oracle.to_dict() if self.oracle is not None else None,
        }
        return doc


def compactness_diagnostic(store: DiagonalStore, v: WeightSpec,
                           radii: Optional[Sequence[float]] = None,
                           thresholds: Thresholds = DEFAULT_THRESHOLDS) -> CompactnessVerdict:
    """Tail profiles of every relevant relative diagonal (finite-scale proxy).

    For each stored offset with weighted contribution above the noise
    floor, t(R) = sup of |a^gamma| over present entries with |lam|_inf >= R.
    A diagonal passes when the outermost tail is below theta * initial
    (threshold branch) or when the profile is nonincreasing and ends below
    c0_trend_ratio * initial (trend branch, for slow decay the window
    cannot push under theta). The overall verdict requires every relevant
    diagonal to pass. This diagnoses vanishing at infinity on a finite
    window; it is evidence, not proof.
    """
    lat = store.lattice
    sup_norm = lat.sup_norms()
    if radii is None:
        step = float(np.max(lat.base.steps))
        radii = list(np.arange(0.0, lat.radius + step / 2, step))
    radii = sorted(float(r) for r in radii)

    report = class_norm(store, v)
    phi = report.phi()
    # entries below the noise floor (relative to the largest entry) are
    # quadrature noise, not structure; clamp them before profiling
    scale = max((float(np.max(np.abs(a))) for a in store.diagonals.values()),
                default=0.0)
    clamp = thresholds.noise_floor * max(scale, thresholds.noise_floor)

    per: List[GammaTail] = []
    all_pass = True
    steps = lat.base.steps
    for g, vals in store.diagonals.items():
        pres = store.presence[g]
        mags = np.abs(vals)
        mags = np.where(mags < clamp, 0.0, mags)
        tails = []
        for r in radii:
            sel = pres & (sup_norm >= r)
            tails.append(float(np.max(mags[sel])) if np.any(sel) else np.nan)
        prof = np.array([t for t in tails if not np.isnan(t)])
        relevant = float(v(np.asarray(g) * steps) * np.max(mags)) > 0.0
        if len(prof) == 0 or prof[0] == 0.0:
            passed, branch = True, "threshold"
        else:
            initial = prof[0]
            if prof[-1] <= thresholds.c0_theta * initial:
                passed, branch = True, "threshold"
            elif np.all(np.diff(prof) <= 1e-12 * initial) and \
                    prof[-1] <= thresholds.c0_trend_ratio * initial:
                passed, branch = True, "trend"
            else:
                passed, branch = False, "failed"
        per.append(GammaTail(gamma=g, phi=phi[g], tails=tails,
                             passed=passed, branch=branch))
        if relevant and not passed:
            all_pass = False

    per.sort(key=lambda gt: -gt.phi)
    return CompactnessVerdict(
        per_gamma=per, radii=list(radii),
        verdict="compact-consistent" if all_pass else "non-compact",
        theta=thresholds.c0_theta)


@dataclass
class SectionOracleReport:
    sizes: List[int]
    svals_head: List[List[float]]
    stabilized: List[float]   # s_k at the largest section, k = 1..k_examined
    s_ref: float
    k_examined: int
    verdict: str          # "compact-consistent" | "non-compact signature" | "inconclusive"
    head_stable: bool

    def to_dict(self) -> dict:
        return {
            "oracle": [{"n": n, "svals_head": h} for n, h in zip(self.sizes, self.svals_head)],
            "stabilized_tail": self.stabilized[-1] if self.stabilized else None,
            "s_ref": self.s_ref,
            "k_examined": self.k_examined,
            "verdict": self.verdict,
            "head_stable": self.head_stable,
        }


def section_singular_values(A: LatticeMatrix, sizes: Sequence[int], m,
                            psi: LatticeMap,
                            thresholds: Thresholds = DEFAULT_THRESHOLDS,
                            head: int = 10, k_cap: int = 100,
                            stab_tol: float = 0.1) -> SectionOracleReport:
    """Singular values of growing rectangular sections as a compactness oracle.

    sizes are integer-coordinate radii. The section at size s keeps the
    columns lam with |coords(lam)|_inf <= s whose image psi(lam) stays in
    the window (so truncation loss is not mistaken for decay) and all rows.
    Entries are conjugated by the weight first: Atilde[mu, lam] =
    m(mu) A[mu, lam] / m(psi(lam)), turning weighted-space action into
    plain l^2 action.

    The verdict looks at fixed singular-value indices k = 1..k_examined
    (k_examined = min(k_cap, columns of the smallest section), kept well
    below the phase-space rank of the window so frame redundancy does not
    produce fake zeros): each s_k must stabilize across section sizes, and
    the stabilized sequence decides. It is "compact-consistent" when the
    stabilized tail dips below theta * s_ref or decreases to below
    c0_trend_ratio of its leading value, "non-compact signature" when it
    plateaus above that, "inconclusive" when the s_k have not stabilized.
    """
    lat = A.lattice
    sizes = sorted(int(s) for s in sizes)
    if sizes[-1] > max(lat.na, lat.nb):
        raise ValueError("section size exceeds the lattice window")

    if m is None:
        m_rows = np.ones(len(lat))
    elif callable(m):
        m_rows = np.asarray(m(lat.points), dtype=float)
    else:
        m_rows = np.asarray(m, dtype=float)
    m_img = np.ones(len(lat))
    ok = psi.image_indices >= 0
    m_img[ok] = m_rows[psi.image_indices[ok]]
    Atil = A.entries * m_rows[:, None] / m_img[None, :]

    coord_sup = np.max(np.abs(lat.coords), axis=1)
    admissible = psi.image_indices >= 0
    all_svals = []
    for s in sizes:
        cols = np.nonzero((coord_sup <= s) & admissible)[0]
        if len(cols) == 0:
            raise ValueError(f"no admissible columns at section size {s}")
        all_svals.append(scipy.linalg.svdvals(Atil[:, cols]))

    s_ref = max(float(sv[0]) for sv in all_svals)
    k_examined = min(k_cap, min(len(sv) for sv in all_svals))
    svals_head = [[float(x) for x in sv[:head]] for sv in all_svals]

    head_stable = True
    if len(sizes) >= 2:
        prev, last = all_svals[-2], all_svals[-1]
        kk = min(k_examined, len(prev), len(last))
        if np.max(np.abs(prev[:kk] - last[:kk])) > stab_tol * max(s_ref, 1e-300):
            head_stable = False

    stabilized = np.asarray(all_svals[-1][:k_examined], dtype=float)
    floor = thresholds.c0_theta * max(s_ref, thresholds.noise_floor)
    leading = max(stabilized[0], thresholds.noise_floor)
    decreasing = bool(np.all(np.diff(stabilized) <= stab_tol * leading))
    if not head_stable:
        verdict = "inconclusive"
    elif stabilized[-1] <= floor:
        verdict = "compact-consistent"
    elif decreasing and stabilized[-1] <= thresholds.c0_trend_ratio * leading:
        verdict = "compact-consistent"
    elif stabilized[-1] > thresholds.c0_trend_ratio * leading:
        verdict = "non-compact signature"
    else:
        verdict = "inconclusive"
    return SectionOracleReport(sizes=sizes, svals_head=svals_head,
                               stabilized=[float(x) for x in stabilized],
                               s_ref=float(s_ref), k_examined=int(k_examined),
                               verdict=verdict, head_stable=head_stable)


# ---------------------------------------------------------------------------
# containers


def save_matrix(path, A: LatticeMatrix) -> None:
    """Binary container: lattice descriptor, enumeration, complex entries."""
    lat = A.lattice
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<ddId", lat.base.alpha, lat.base.beta,
                             lat.base.d, lat.radius))
        fh.write(struct.pack("<I", len(lat)))
        fh.write(np.ascontiguousarray(lat.coords, dtype="<i4").tobytes())
        flat = A.entries.ravel()
        buf = np.empty(2 * flat.size, dtype="<f8")
        buf[0::2] = flat.real
        buf[1::2] = flat.imag
        fh.write(buf.tobytes())


def load_matrix(path) -> LatticeMatrix:
    from tflab.lattices import build_lattice

    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a matrix container")
        alpha, beta, d, radius = struct.unpack("<ddId", fh.read(28))
        (n,) = struct.unpack("<I", fh.read(4))
        lat = build_lattice(alpha, beta, d, radius)
        if len(lat) != n:
            raise ValueError("stored size does not match the lattice")
        coords = np.frombuffer(fh.read(n * 2 * d * 4), dtype="<i4").reshape(n, 2 * d)
        if not np.array_equal(coords, lat.coords):
            raise ValueError("stored enumeration does not match")
        buf = np.frombuffer(fh.read(), dtype="<f8")
    entries = (buf[0::2] + 1j * buf[1::2]).reshape(n, n)
    return LatticeMatrix(lat, entries)


def matrix_to_csv(path, A: LatticeMatrix, chi=None, floor: float = 0.0) -> None:
    """CSV of |entries| with lattice coordinates and optional graph distance.

    Columns: lam coords, mu coords, abs, and <chi(lam) - mu> when a map is
    given. Entries with modulus below floor are skipped.
    """
    lat = A.lattice
    n = len(lat)
    mags = np.abs(A.entries)
    if chi is not None:
        mapped = chi.points(lat.points)
        diff = mapped[None, :, :] - lat.points[:, None, :]
        dist = np.sqrt(1.0 + np.sum(diff * diff, axis=-1))
    mu_idx, lam_idx = np.nonzero(mags >= floor)
    cols = [lat.coords[lam_idx], lat.coords[mu_idx], mags[mu_idx, lam_idx][:, None]]
    names = [f"lam{i}" for i in range(lat.coords.shape[1])] + \
            [f"mu{i}" for i in range(lat.coords.shape[1])] + ["abs"]
    if chi is not None:
        cols.append(dist[mu_idx, lam_idx][:, None])
        names.append("bracket_dist")
    np.savetxt(path, np.column_stack(cols), delimiter=",",
               header=",".join(names), comments="")
