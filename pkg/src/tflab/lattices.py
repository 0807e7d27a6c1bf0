"""Truncated rectangular time-frequency lattices and self-maps on them.

A lattice point is lam = (alpha*n, beta*m) with n, m in Z^d; the truncation
keeps the points with sup-norm at most R and enumerates them
lexicographically over the integer coordinates (n_1..n_d, m_1..m_d), so
matrices and reports built on one machine reproduce on another.

The fundamental domain is the half-open centered box
Q = [-alpha/2, alpha/2)^d x [-beta/2, beta/2)^d. Every z in R^{2d} then
splits uniquely as z = q + lam with q in Q; the lower-closed convention
fixes the split on cell boundaries. A symmetric closed box would lose the
uniqueness that the lattice-rounding of canonical transformations needs.

Lattice self-maps (total tables Lambda_R -> Lambda) carry their fiber
structure: the maximum preimage cardinality, a greedy partition into sets
on which the map is injective, and, when the second component splits as a
function of the second index plus a bounded offset, the decomposition that
makes mixed-norm estimates possible.
"""

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class Lattice:
    """The infinite lattice alpha*Z^d x beta*Z^d."""

    alpha: float
    beta: float
    d: int = 1

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("lattice steps must be positive")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def steps(self) -> np.ndarray:
        """Per-axis steps, time axes first: (alpha,)*d + (beta,)*d."""
        return np.array([self.alpha] * self.d + [self.beta] * self.d)

    def point(self, coords) -> np.ndarray:
        """Real coordinates of the lattice point with integer coords."""
        return np.asarray(coords, dtype=float) * self.steps


@dataclass(frozen=True)
class FundamentalDomain:
    """Half-open centered box attached to a lattice (lower side closed)."""

    lattice: Lattice

    def decompose(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Split z = q + lam with lam on the lattice and q in the box.

        Returns (integer coords of lam, remainder q). Vectorized over
        leading axes of z.
        """
        z = np.asarray(z, dtype=float)
        steps = self.lattice.steps
        coords = np.floor(z / steps + 0.5).astype(int)
        return coords, z - coords * steps

    def contains(self, q: np.ndarray) -> bool:
        q = np.asarray(q, dtype=float)
        half = self.lattice.steps / 2.0
        return bool(np.all(q >= -half) and np.all(q < half))

    @property
    def radius(self) -> float:
        """Euclidean circumradius of the box."""
        return float(np.linalg.norm(self.lattice.steps / 2.0))


class TruncatedLattice:
    """Finite section {lam : |lam|_inf <= R} with a fixed enumeration.

    Attributes
    ----------
    coords : (n, 2d) int array of integer coordinates, lexicographic order.
    points : (n, 2d) float array of the corresponding real positions.
    """

    def __init__(self, base: Lattice, radius: float):
        if radius <= 0:
            raise ValueError("truncation radius must be positive")
        self.base = base
        self.radius = float(radius)
        # floor with a small slack so R being an exact multiple of a step
        # keeps the boundary shell
        self.na = int(np.floor(radius / base.alpha + 1e-9))
        self.nb = int(np.floor(radius / base.beta + 1e-9))
        axes = [np.arange(-self.na, self.na + 1)] * base.d + \
               [np.arange(-self.nb, self.nb + 1)] * base.d
        grids = np.meshgrid(*axes, indexing="ij")
        self.coords = np.stack([g.ravel() for g in grids], axis=1)
        self.points = self.coords * base.steps
        self._index: Dict[tuple, int] = {
            tuple(c): i for i, c in enumerate(self.coords)
        }
        self._shape = tuple(2 * self.na + 1 for _ in range(base.d)) + \
                      tuple(2 * self.nb + 1 for _ in range(base.d))
        self._offset = np.array([self.na] * base.d + [self.nb] * base.d)

    def __len__(self):
        return len(self.coords)

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def time_size(self) -> int:
        return (2 * self.na + 1) ** self.base.d

    @property
    def freq_size(self) -> int:
        return (2 * self.nb + 1) ** self.base.d

    def index_of(self, coords) -> int:
        """Enumeration index of the point with the given integer coords,
        or -1 when the point is outside the truncation."""
        return self._index.get(tuple(int(c) for c in coords), -1)

    def indices_of(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized enumeration lookup; -1 marks points outside the window."""
        coords = np.asarray(coords, dtype=int)
        shifted = coords + self._offset
        inside = np.all((shifted >= 0) & (shifted < np.array(self._shape)), axis=-1)
        out = np.full(coords.shape[:-1], -1, dtype=int)
        if np.any(inside):
            flat = np.ravel_multi_index(
                tuple(shifted[inside].T), self._shape)
            out[inside] = flat
        return out

    def contains(self, coords) -> bool:
        return self.index_of(coords) >= 0

    def sup_norms(self) -> np.ndarray:
        """|lam|_inf of every enumerated point."""
        return np.max(np.abs(self.points), axis=1)

    def fundamental_domain(self) -> FundamentalDomain:
        return FundamentalDomain(self.base)

    def to_dict(self) -> dict:
        return {
            "alpha": self.base.alpha,
            "beta": self.base.beta,
            "d": self.base.d,
            "R": self.radius,
            "points": self.points.tolist(),
        }


def build_lattice(alpha: float, beta: float, d: int, radius: float) -> TruncatedLattice:
    """Construct the truncated lattice; parameters must be positive."""
    return TruncatedLattice(Lattice(alpha=alpha, beta=beta, d=d), radius)


class LatticeMap:
    """A total map psi: Lambda_R -> Lambda stored as an integer-coordinate table.

    Images may fall outside the truncation window; reads through such
    images are the caller's concern (sequence operations treat them as
    structural zeros).
    """

    def __init__(self, lattice: TruncatedLattice, image_coords: np.ndarray):
        image_coords = np.asarray(image_coords, dtype=int)
        if image_coords.shape != lattice.coords.shape:
            raise ValueError("image table must cover the whole truncation")
        self.lattice = lattice
        self.image_coords = image_coords
        self.image_indices = lattice.indices_of(image_coords)

    @classmethod
    def identity(cls, lattice: TruncatedLattice) -> "LatticeMap":
        return cls(lattice, lattice.coords.copy())

    @classmethod
    def from_callable(cls, lattice: TruncatedLattice,
                      fun: Callable[[np.ndarray], np.ndarray]) -> "LatticeMap":
        """Build the table from a function acting on integer coordinates."""
        images = np.array([fun(c) for c in lattice.coords], dtype=int)
        return cls(lattice, images)

    @property
    def image_points(self) -> np.ndarray:
        return self.image_coords * self.lattice.base.steps

    def fiber_sizes(self) -> Dict[tuple, int]:
        sizes: Dict[tuple, int] = {}
        for c in self.image_coords:
            key = tuple(int(v) for v in c)
            sizes[key] = sizes.get(key, 0) + 1
        return sizes

    def to_dict(self) -> dict:
        return {
            "lattice": self.lattice.to_dict(),
            "psi": [self.lattice.coords.tolist(), self.image_coords.tolist()],
        }


def fiber_bound(psi: LatticeMap) -> int:
    """Maximum cardinality of a preimage psi^{-1}({lam}) on the truncation."""
    sizes = psi.fiber_sizes()
    return max(sizes.values()) if sizes else 0


def partition_injective(psi: LatticeMap) -> List[np.ndarray]:
    """Split the truncation into classes on which psi is injective.

    Greedy coloring in enumeration order; the number of classes never
    exceeds the fiber bound because the k-th member of a fiber lands in
    class k at the latest.
    """
    classes: List[List[int]] = []
    used: List[set] = []
    for i, c in enumerate(psi.image_coords):
        key = tuple(int(v) for v in c)
        for j, seen in enumerate(used):
            if key not in seen:
                classes[j].append(i)
                seen.add(key)
                break
        else:
            classes.append([i])
            used.append({key})
    return [np.array(cls, dtype=int) for cls in classes]


@dataclass
class AdmissibleDecomposition:
    """Split of the second component as psi_2(i, j) = base_2(j) + offset(i, j).

    accepted is False when the offset set outgrows the configured cap, in
    which case the remaining fields describe how the split failed.
    """

    accepted: bool
    offsets: Optional[np.ndarray] = None          # (n, d) int, per enumerated point
    base_table: Optional[Dict[tuple, tuple]] = None  # j-coords -> base_2(j) coords
    offset_set: List[tuple] = field(default_factory=list)
    fiber_m: int = 0        # max(card psi^{-1}, card base_2^{-1})
    m1: int = 0             # |offset_set| * fiber_m
    reason: str = ""


def admissibility_decompose(psi: LatticeMap, offset_cap: int = 9) -> AdmissibleDecomposition:
    """Try to split psi's second component into a second-index function
    plus a bounded offset table.

    The reference map is pinned to the enumeration-least first index, so
    base_2(j) := psi_2(i0, j); offsets are psi_2(i, j) - base_2(j). The
    split is accepted when the set of offsets has at most offset_cap
    elements and base_2 has bounded fibers on the window.
    """
    lat = psi.lattice
    d = lat.base.d
    first = psi.lattice.coords[:, :d]
    second = psi.lattice.coords[:, d:]
    img_second = psi.image_coords[:, d:]

    i0 = np.full(d, -lat.na, dtype=int)
    base_table: Dict[tuple, tuple] = {}
    for k in range(len(lat)):
        if np.all(first[k] == i0):
            base_table[tuple(second[k])] = tuple(int(v) for v in img_second[k])

    offsets = np.empty_like(img_second)
    offset_set = set()
    for k in range(len(lat)):
        base = base_table[tuple(second[k])]
        offsets[k] = img_second[k] - np.asarray(base)
        offset_set.add(tuple(int(v) for v in offsets[k]))
        if len(offset_set) > offset_cap:
            return AdmissibleDecomposition(
                accepted=False,
                offset_set=sorted(offset_set),
                reason=f"offset set exceeded cap {offset_cap}: "
                       "not admissible at this truncation",
            )

    base_fibers: Dict[tuple, int] = {}
    for b in base_table.values():
        base_fibers[b] = base_fibers.get(b, 0) + 1
    m = max(fiber_bound(psi), max(base_fibers.values()))
    c = len(offset_set)
    return AdmissibleDecomposition(
        accepted=True,
        offsets=offsets,
        base_table=base_table,
        offset_set=sorted(offset_set),
        fiber_m=m,
        m1=c * m,
    )


def reconstruct_second_component(dec: AdmissibleDecomposition,
                                 psi: LatticeMap) -> np.ndarray:
    """Reassemble psi_2 from the accepted decomposition (exactness check)."""
    if not dec.accepted:
        raise ValueError("decomposition was rejected")
    d = psi.lattice.base.d
    second = psi.lattice.coords[:, d:]
    base = np.array([dec.base_table[tuple(j)] for j in second], dtype=int)
    return base + dec.offsets


def save_lattice_map(path, psi: LatticeMap,
                     dec: Optional[AdmissibleDecomposition] = None) -> None:
    doc = psi.to_dict()
    doc["offsets"] = dec.offset_set if dec is not None else []
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_lattice_map(path) -> LatticeMap:
    with open(path) as fh:
        doc = json.load(fh)
    lat_doc = doc["lattice"]
    lat = build_lattice(lat_doc["alpha"], lat_doc["beta"], lat_doc["d"], lat_doc["R"])
    src, dst = doc["psi"]
    src = np.asarray(src, dtype=int)
    if not np.array_equal(src, lat.coords):
        raise ValueError("stored source enumeration does not match the lattice")
    return LatticeMap(lat, np.asarray(dst, dtype=int))
