"""Weighted mixed-norm sequence spaces on truncated lattices.

Sequences are flat complex arrays over the lattice enumeration. The mixed
norm treats the time block of the integer coordinates as the inner index
and the frequency block as the outer one:

    ||x||_{p,q;m} = ( sum_j ( sum_i |x_{i,j} m_{i,j}|^p )^{q/p} )^{1/q}

with the usual sup conventions when p or q is infinite. Lattice
translations read indices shifted out of the truncation window as zero and
report how many nonzero entries were lost that way, so finite-section
artifacts stay measurable.
"""

from typing import Optional, Tuple, Union

import numpy as np

from tflab.lattices import TruncatedLattice

PNorm = Union[int, float]


def _check_exponent(p: PNorm, name: str) -> float:
    p = float(p)
    if not (p >= 1):
        raise ValueError(f"{name} must lie in [1, inf], got {p}")
    return p


def _weight_values(lat: TruncatedLattice, m) -> np.ndarray:
    if m is None:
        return np.ones(len(lat))
    if callable(m):
        return np.asarray(m(lat.points), dtype=float)
    arr = np.asarray(m, dtype=float)
    if arr.shape != (len(lat),):
        raise ValueError("weight table length does not match the lattice")
    return arr


def lp_norm(lat: TruncatedLattice, x: np.ndarray, p: PNorm, m=None) -> float:
    """Weighted l^p norm over the whole enumeration."""
    p = _check_exponent(p, "p")
    vals = np.abs(np.asarray(x) * _weight_values(lat, m))
    if np.isinf(p):
        return float(np.max(vals)) if vals.size else 0.0
    return float(np.sum(vals ** p) ** (1.0 / p))


def lpq_norm(lat: TruncatedLattice, x: np.ndarray, p: PNorm, q: PNorm, m=None) -> float:
    """Mixed (p, q) norm, inner index = time block, outer = frequency block."""
    p = _check_exponent(p, "p")
    q = _check_exponent(q, "q")
    vals = np.abs(np.asarray(x) * _weight_values(lat, m))
    grid = vals.reshape(lat.time_size, lat.freq_size)
    if np.isinf(p):
        inner = np.max(grid, axis=0)
    else:
        inner = np.sum(grid ** p, axis=0) ** (1.0 / p)
    if np.isinf(q):
        return float(np.max(inner))
    return float(np.sum(inner ** q) ** (1.0 / q))


def translate_seq(lat: TruncatedLattice, x: np.ndarray,
                  gamma) -> Tuple[np.ndarray, int]:
    """(T_gamma x)_lam = x_{lam - gamma} on the truncation.

    gamma is given in integer coordinates and must be a lattice point.
    Returns the shifted sequence and the count of nonzero entries of x
    whose shifted position fell outside the window.
    """
    gamma = np.asarray(gamma)
    if gamma.shape != (2 * lat.base.d,):
        raise ValueError("gamma must have 2d integer coordinates")
    if not np.all(gamma == np.round(gamma)):
        raise ValueError("gamma is not a lattice point")
    gamma = gamma.astype(int)

    x = np.asarray(x)
    y = np.zeros_like(x)
    src = lat.indices_of(lat.coords - gamma)
    inside = src >= 0
    y[inside] = x[src[inside]]

    dst = lat.indices_of(lat.coords + gamma)
    lost = int(np.sum((dst < 0) & (np.abs(x) > 0)))
    return y, lost


def spike(lat: TruncatedLattice, coords, value=1.0) -> np.ndarray:
    """The standard basis sequence e_lam (integer coords)."""
    e = np.zeros(len(lat), dtype=complex)
    idx = lat.index_of(coords)
    if idx < 0:
        raise ValueError("spike position outside the truncation")
    e[idx] = value
    return e
