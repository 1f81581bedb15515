import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from memorium import (
    ContinuityError,
    DomainError,
    History,
    Process,
    concat,
    constant_history,
    lemma_process,
    prolong,
    prolong_relative,
    restrict,
    shift,
    varied_history,
)
from memorium.history import bump
from memorium.sampling import random_history, random_process

seeds = st.integers(0, 2**32 - 1)


def test_evaluation_and_tail():
    H = History([0.0, 1.0, 3.0], [[0.0], [2.0], [4.0]])
    assert H(0.5)[0] == pytest.approx(1.0)
    assert H(2.0)[0] == pytest.approx(3.0)
    assert H(10.0)[0] == 4.0
    assert np.array_equal(H.final, [4.0])
    with pytest.raises(DomainError):
        H(-1.0)


def test_grid_validation():
    with pytest.raises(DomainError):
        History([0.0, 2.0, 1.0], [[0.0], [1.0], [2.0]])
    with pytest.raises(DomainError):
        History([1.0, 2.0], [[0.0], [1.0]])
    with pytest.raises(DomainError):
        History([0.0, 1.0, 1.0, 1.0], [[0.0], [1.0], [2.0], [3.0]])


def test_jump_is_right_continuous():
    H = History([0.0, 1.0, 1.0, 2.0], [[0.0], [1.0], [5.0], [5.0]])
    assert H.has_jumps
    assert H(1.0)[0] == 5.0
    assert H.left_limit(1.0)[0] == pytest.approx(1.0)


def test_prolong_requires_continuity():
    H = constant_history([1.0])
    K = Process(1.0, [0.0], [[0.0]], [0.5])
    with pytest.raises(ContinuityError):
        prolong(K, H)


def test_prolong_places_process_on_recent_side():
    H = History([0.0, 1.0], [[1.0], [3.0]])
    K = Process(2.0, [0.0, 1.0], [[7.0], [4.0]], [1.0])
    P = prolong(K, H)
    assert P(0.0)[0] == 7.0
    assert P(1.5)[0] == pytest.approx(2.5)
    assert P(2.5)[0] == pytest.approx(H(0.5)[0])


@given(seeds)
def test_prolongation_is_associative(seed):
    rng = np.random.default_rng(seed)
    H = random_history(rng, 2)
    K = random_process(rng, H.initial)
    K2 = random_process(rng, K.values[0])
    a = prolong(K2, prolong(K, H))
    b = prolong(concat(K2, K), H)
    assert np.allclose(a.grid, b.grid, atol=1e-12)
    assert np.allclose(a.values, b.values, atol=1e-12)


def test_relative_continuation_stores_jump():
    H = History([0.0, 1.0], [[1.0], [0.0]])
    K = Process(1.0, [0.0], [[2.0]], [0.5])
    P = prolong_relative(K, H)
    assert P(0.0)[0] == pytest.approx(3.0)
    assert P.left_limit(1.0)[0] == pytest.approx(1.5)
    assert P(1.0)[0] == pytest.approx(1.0)


@given(seeds, st.floats(0.0, 20.0))
def test_shift_matches_evaluation(seed, t):
    H = random_history(seed, 2)
    S = shift(H, t)
    s = np.linspace(0.0, 5.0, 11)
    assert np.allclose(S(s), H(s + t), atol=1e-12)


@given(seeds, st.floats(0.1, 15.0))
def test_restrict_then_prolong_reproduces(seed, p):
    H = random_history(seed, 1)
    K = restrict(H, p)
    tail = shift(H, p)
    P = prolong(K, tail)
    s = np.linspace(0.0, 20.0, 41)
    assert np.allclose(P(s), H(s), atol=1e-12)


def test_lemma_process_bridges():
    H = History([0.0, 2.0], [[0.0], [2.0]])
    H2 = constant_history([5.0])
    L = lemma_process(H, H2, 1.0)
    assert L.values[0][0] == pytest.approx(H(1.0)[0])
    assert L.terminal[0] == 5.0


def test_bump_shape():
    x = np.linspace(-1.5, 1.5, 301)
    f = bump(x)
    assert f[np.abs(x) >= 1].max() == 0.0
    h = 1e-6
    assert (bump(h) - bump(-h)) / (2 * h) == pytest.approx(1.0, rel=1e-9)


def test_varied_history_sets_rate():
    H = History(np.linspace(0, 4, 9), np.linspace(0, 4, 9)[:, None] ** 2)
    Ha = varied_history(H, 2.0, 0.5, [3.0], resolution=64)
    e1 = abs(Ha.rate(2.0)[0] - 3.0)
    e2 = abs(varied_history(H, 2.0, 0.5, [3.0], resolution=128).rate(2.0)[0] - 3.0)
    # the piecewise-linear bump has a second-order slope error at its centre
    assert e1 < 1e-2 and 3.5 < e1 / e2 < 4.5
    assert np.allclose(Ha(np.array([0.5, 3.5])), H(np.array([0.5, 3.5])))
    with pytest.raises(DomainError):
        varied_history(H, 0.2, 0.5, [0.0])


def test_dict_roundtrip():
    H = random_history(3, 2)
    assert np.array_equal(History.from_dict(H.to_dict()).values, H.values)
    K = random_process(3, H.initial)
    K2 = Process.from_dict(K.to_dict())
    assert K2.duration == K.duration and np.array_equal(K2.terminal, K.terminal)
