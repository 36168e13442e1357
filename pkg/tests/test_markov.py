from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesosettle.markov import (
    AbsorbingChain,
    ConfidenceNotReached,
    absorption_series,
    absorption_stats,
    build_canonical,
    point_mass,
    transitions_for_confidence,
)
from mesosettle.jitter import WindowSpec, build_isi1_chain


def three_state():
    p = np.array([
        [0.5, 0.25, 0.25],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    return AbsorbingChain(p, frozenset({1, 2}))


def test_canonical_decomposition():
    canon = build_canonical(three_state())
    assert canon.q.shape == (1, 1)
    assert canon.q[0, 0] == 0.5
    assert np.array_equal(canon.r, [[0.25, 0.25]])
    assert list(canon.transient_order) == [0]
    assert sorted(canon.absorbing_order) == [1, 2]


def test_geometric_mean_and_variance():
    # absorb with probability 1/2 each step: mean 2, variance 2
    stats = absorption_stats(three_state())
    assert stats.mean[0] == pytest.approx(2.0, rel=1e-12)
    assert stats.variance[0] == pytest.approx(2.0, rel=1e-12)
    assert stats.std[0] == pytest.approx(np.sqrt(2.0), rel=1e-12)


def test_closed_form_birth_death_means():
    for width in (4, 9, 40, 121, 200):
        chain = build_isi1_chain(WindowSpec(width))
        stats = absorption_stats(chain)
        k = np.arange(1, width)
        expected = 2.0 * k * (width - k)
        assert np.allclose(stats.mean, expected, rtol=1e-9)


def test_mean_matches_series_first_moment():
    chain = build_isi1_chain(WindowSpec(8))
    stats = absorption_stats(chain)
    series = absorption_series(chain, point_mass(chain, 4), target_confidence=1 - 1e-10)
    n = np.arange(series.pmf.size)
    assert np.sum(n * series.pmf) == pytest.approx(stats.mean_at(4), rel=5e-3)


def test_reference_confidence_counts():
    for width, expected in ((2, 7), (5, 48), (40, 3142)):
        chain = build_isi1_chain(WindowSpec(width))
        p0 = point_mass(chain, width // 2)
        assert transitions_for_confidence(chain, p0, 0.99) == expected


def test_row_sum_renormalization_and_rejection():
    p = np.array([
        [0.5, 0.25, 0.25 - 1e-10],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    chain = AbsorbingChain(p, frozenset({1, 2}))
    assert np.allclose(chain.transitions.sum(axis=1), 1.0, atol=1e-15)

    p_bad = p.copy()
    p_bad[0, 2] = 0.25 - 1e-6
    with pytest.raises(ValueError):
        AbsorbingChain(p_bad, frozenset({1, 2}))


def test_structural_rejections():
    with pytest.raises(ValueError):
        AbsorbingChain(np.ones((2, 3)) / 3, frozenset({1}))
    p = np.array([[0.5, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        AbsorbingChain(p, frozenset())  # no absorbing states declared
    with pytest.raises(ValueError):
        AbsorbingChain(p, frozenset({0}))  # declared row is not identity
    neg = np.array([[1.2, -0.2], [0.0, 1.0]])
    with pytest.raises(ValueError):
        AbsorbingChain(neg, frozenset({1}))


def test_unreachable_absorbing_rejected():
    # state 1 loops on itself and can never reach the absorbing state
    p = np.array([
        [0.5, 0.0, 0.5],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    with pytest.raises(ValueError):
        AbsorbingChain(p, frozenset({2}))


def test_all_absorbing_has_no_canonical_form():
    p = np.eye(2)
    chain = AbsorbingChain(p, frozenset({0, 1}))
    with pytest.raises(ValueError):
        build_canonical(chain)


def test_series_initial_distribution_validation():
    chain = three_state()
    with pytest.raises(ValueError):
        absorption_series(chain, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        absorption_series(chain, np.array([-0.1, 0.6, 0.5]))
    with pytest.raises(ValueError):
        absorption_series(chain, np.array([0.2, 0.2, 0.2]))
    with pytest.raises(ValueError):
        absorption_series(chain, point_mass(chain, 0), target_confidence=1.0)


def test_confidence_not_reached_carries_partial():
    chain = build_isi1_chain(WindowSpec(40))
    p0 = point_mass(chain, 20)
    with pytest.raises(ConfidenceNotReached) as exc:
        absorption_series(chain, p0, target_confidence=0.99, max_n=50)
    partial = exc.value.partial
    assert partial.cdf.size == 51
    assert np.all(np.diff(partial.cdf) >= -1e-15)
    assert partial.cdf[-1] < 0.99


def test_series_without_target_runs_to_max_n():
    chain = three_state()
    series = absorption_series(chain, point_mass(chain, 0), max_n=20)
    assert series.cdf.size == 21
    assert series.cdf[-1] == pytest.approx(1 - 0.5**20, rel=1e-12)
    assert series.pmf[0] == 0.0


def test_point_mass_on_absorbing_state():
    chain = three_state()
    p0 = point_mass(chain, 1)
    assert transitions_for_confidence(chain, p0, 0.99) == 0


@st.composite
def birth_death(draw):
    width = draw(st.integers(min_value=2, max_value=12))
    p_left = draw(st.floats(min_value=0.05, max_value=0.45))
    p_right = draw(st.floats(min_value=0.05, max_value=0.45))
    n = width + 1
    p = np.zeros((n, n))
    p[0, 0] = p[width, width] = 1.0
    for i in range(1, width):
        p[i, i - 1] = p_left
        p[i, i + 1] = p_right
        p[i, i] = 1.0 - p_left - p_right
    return AbsorbingChain(p, frozenset({0, width}))


@given(birth_death())
@settings(max_examples=40, deadline=None)
def test_stats_are_finite_and_positive(chain):
    stats = absorption_stats(chain)
    assert np.all(stats.mean > 0)
    assert np.all(np.isfinite(stats.variance))
    assert np.all(stats.variance >= 0)


@given(st.integers(min_value=3, max_value=10), st.randoms(use_true_random=False))
@settings(max_examples=25, deadline=None)
def test_permutation_equivariance(width, rnd):
    chain = build_isi1_chain(WindowSpec(width))
    n = chain.n_states
    perm = list(range(n))
    rnd.shuffle(perm)
    perm = np.array(perm)
    p2 = np.zeros_like(chain.transitions)
    p2[np.ix_(perm, perm)] = chain.transitions
    chain2 = AbsorbingChain(p2, frozenset(int(perm[a]) for a in chain.absorbing))
    s1 = absorption_stats(chain)
    s2 = absorption_stats(chain2)
    for k in range(1, width):
        assert s2.mean_at(int(perm[k])) == pytest.approx(s1.mean_at(k), rel=1e-10)
