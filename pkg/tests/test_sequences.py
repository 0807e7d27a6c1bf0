import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tflab.lattices import build_lattice
from tflab.sequences import lp_norm, lpq_norm, spike, translate_seq
from tflab.weights import polynomial_weight


@pytest.fixture(scope="module")
def lat():
    return build_lattice(1, 1, 1, 3)


def test_spike_norm_is_weight_value(lat):
    v = polynomial_weight(1.0)
    m = v(lat.points)
    for coords in ([0, 0], [2, -1], [-3, 3]):
        e = spike(lat, coords)
        idx = lat.index_of(coords)
        for p, q in [(1, 1), (2, 3), (np.inf, 1), (2, np.inf)]:
            assert lpq_norm(lat, e, p, q, m) == pytest.approx(m[idx])


def test_hand_computed_mixed_norm():
    # entries x[i=1,j=1]=1, x[i=2,j=1]=3, x[i=1,j=2]=2, x[i=2,j=2]=4
    # p=1 (inner over i), q=inf: inner sums are 4 and 6, sup = 6
    lat = build_lattice(1, 1, 1, 2)
    x = np.zeros(len(lat), dtype=complex)
    x[lat.index_of([1, 1])] = 1
    x[lat.index_of([2, 1])] = 3
    x[lat.index_of([1, 2])] = 2
    x[lat.index_of([2, 2])] = 4
    assert lpq_norm(lat, x, 1, np.inf) == pytest.approx(6.0)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25)
def test_p_equals_q_matches_plain_lp(seed):
    lat = build_lattice(1, 1, 1, 3)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=len(lat)) + 1j * rng.normal(size=len(lat))
    m = polynomial_weight(0.5)(lat.points)
    for p in (1, 2, np.inf):
        assert lpq_norm(lat, x, p, p, m) == pytest.approx(lp_norm(lat, x, p, m))


def test_euclidean_case(lat, rng):
    x = rng.normal(size=len(lat))
    assert lpq_norm(lat, x, 2, 2) == pytest.approx(np.linalg.norm(x))


def test_exponent_validation(lat):
    with pytest.raises(ValueError):
        lpq_norm(lat, np.zeros(len(lat)), 0.5, 2)
    with pytest.raises(ValueError):
        lp_norm(lat, np.zeros(len(lat)), -1)


def test_translate_identity(lat, rng):
    x = rng.normal(size=len(lat))
    y, lost = translate_seq(lat, x, [0, 0])
    assert np.array_equal(x, y)
    assert lost == 0


def test_translate_spike(lat):
    e = spike(lat, [1, -1])
    y, _ = translate_seq(lat, e, [1, 2])
    assert y[lat.index_of([2, 1])] == 1
    assert np.sum(np.abs(y)) == 1


def test_translate_composition_away_from_boundary(lat):
    x = spike(lat, [0, 0]) + 2 * spike(lat, [1, 0])
    y1, _ = translate_seq(lat, x, [1, 0])
    y2, _ = translate_seq(lat, y1, [0, 1])
    z, _ = translate_seq(lat, x, [1, 1])
    assert np.allclose(y2, z)


def test_translate_loss_count(lat):
    e = spike(lat, [3, 0])
    _, lost = translate_seq(lat, e, [1, 0])
    assert lost == 1


def test_translate_rejects_off_lattice(lat):
    with pytest.raises(ValueError):
        translate_seq(lat, np.zeros(len(lat)), [0.5, 0])
    with pytest.raises(ValueError):
        translate_seq(lat, np.zeros(len(lat)), [1, 2, 3])


def test_translation_norm_bound(lat, rng):
    # ||T_gamma x||_{l^p_v} <= v(gamma) ||x||_{l^p_v} for interior-supported x
    v = polynomial_weight(1.0)
    m = v(lat.points)
    gamma = np.array([1, -1])
    vg = v(gamma * lat.base.steps)
    for _ in range(20):
        x = np.zeros(len(lat), dtype=complex)
        inner = np.max(np.abs(lat.coords), axis=1) <= 2
        x[inner] = rng.normal(size=inner.sum())
        y, lost = translate_seq(lat, x, gamma)
        assert lost == 0
        for p in (1, 2, np.inf):
            assert lp_norm(lat, y, p, m) <= vg * lp_norm(lat, x, p, m) * (1 + 1e-12)
