import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soda.core import Dataset, DataError, SelectionConfig
from soda.simgen import gen_regression
from soda.ssoda import (
    HTooLarge,
    SlicedModel,
    SliceTooSmall,
    fit_sliced_gaussian,
    predict,
    s_soda_select,
    slice_response,
)


def model_1d(means, variances, responses):
    h = len(means)
    return SlicedModel(
        predictors=(0,),
        means=np.asarray(means, float).reshape(h, 1),
        covariances=np.asarray(variances, float).reshape(h, 1, 1),
        response_means=np.asarray(responses, float),
        counts=np.ones(h, dtype=int),
    )


def test_slice_examples():
    np.testing.assert_array_equal(slice_response([3, 1, 2, 5, 4], 5).h, [2, 0, 1, 4, 3])
    sl = slice_response([1, 2, 3, 4, 5], 2)
    np.testing.assert_array_equal(sl.sizes, [3, 2])
    np.testing.assert_array_equal(sl.h, [0, 0, 0, 1, 1])
    np.testing.assert_array_equal(sl.boundaries, [3])
    sl = slice_response(np.zeros(7), 2)
    np.testing.assert_array_equal(sl.h, [0, 0, 0, 0, 1, 1, 1])


def test_slice_errors():
    with pytest.raises(HTooLarge):
        slice_response([1.0, 2.0], 3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=60), st.integers(1, 10))
def test_slice_sizes_and_monotonicity(y, h):
    y = np.array(y)
    h = min(h, len(y))
    sl = slice_response(y, h)
    sizes = sl.sizes
    assert sizes.sum() == len(y)
    assert sizes.max() - sizes.min() <= 1
    assert list(sizes) == sorted(sizes, reverse=True)
    for a in range(len(y)):
        for b in range(len(y)):
            assert not (y[a] < y[b] and sl.h[a] > sl.h[b])


@pytest.mark.criterion(8)
@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-500, 500), min_size=2, max_size=60), st.integers(2, 8))
def test_slicing_invariant_to_increasing_transform(y, h):
    # values on a 0.1 grid keep their order and ties under each transform
    y = np.array(y) / 10.0
    h = min(h, len(y))
    base = slice_response(y, h).h
    for g in (np.exp, lambda v: v ** 3 + 2 * v, lambda v: np.arctan(v / 10)):
        np.testing.assert_array_equal(slice_response(g(y), h).h, base)


def test_fit_hand_example():
    x = np.array([[0.0], [2.0], [4.0], [6.0]])
    y = np.array([1.0, 2.0, 3.0, 4.0])
    with pytest.warns(RuntimeWarning):
        m = fit_sliced_gaussian(Dataset(x, y, categorical=False), [0], H=2)
    np.testing.assert_allclose(m.means[:, 0], [1, 5])
    lam = 1e-6
    np.testing.assert_allclose(m.covariances[:, 0, 0], [1 + lam, 1 + lam], rtol=1e-14)
    np.testing.assert_allclose(m.response_means, [1.5, 3.5])
    assert m.counts.sum() == 4


def test_fit_matches_direct_formula():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((60, 4))
    y = rng.standard_normal(60)
    m = fit_sliced_gaussian(Dataset(x, y, categorical=False), [3, 1], H=3)
    assert m.predictors == (1, 3)
    sl = slice_response(y, 3)
    for h in range(3):
        xs = x[sl.h == h][:, [1, 3]]
        mu = xs.mean(axis=0)
        cov = sum(np.outer(r - mu, r - mu) for r in xs) / len(xs)
        lam = 1e-6 * max(1.0, np.trace(cov) / 2)
        np.testing.assert_allclose(m.means[h], mu, atol=1e-12)
        np.testing.assert_allclose(m.covariances[h], cov + lam * np.eye(2), atol=1e-12)
        assert np.all(np.linalg.eigvalsh(m.covariances[h]) > 0)


def test_constant_slice_is_regularised():
    x = np.array([[1.0], [1.0], [1.0], [5.0], [6.0], [7.0]])
    y = np.arange(6.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = fit_sliced_gaussian(Dataset(x, y, categorical=False), [0], H=2)
    assert m.covariances[0, 0, 0] == pytest.approx(1e-6)
    assert np.isfinite(predict(m, [1.0]))


def test_small_slices_warn_and_too_small_raise():
    rng = np.random.default_rng(1)
    data = Dataset(rng.standard_normal((12, 3)), rng.standard_normal(12), categorical=False)
    with pytest.warns(RuntimeWarning):
        m = fit_sliced_gaussian(data, [0, 1, 2], H=4)
    assert m.warnings
    with pytest.raises(SliceTooSmall):
        fit_sliced_gaussian(data, [0], H=12)


@pytest.mark.criterion(8)
def test_predict_hand_values():
    m = model_1d([0, 2], [1, 1], [0, 10])
    assert predict(m, [1.0]) == pytest.approx(5.0, abs=1e-12)
    expected = 10 * math.exp(-2) / (1 + math.exp(-2))
    assert predict(m, [0.0]) == pytest.approx(expected, abs=1e-12)
    assert round(predict(m, [0.0]), 5) == 1.19203


def test_predict_single_slice_and_shared_components():
    assert predict(model_1d([0], [1], [3.5]), [100.0]) == 3.5
    m = model_1d([1, 1, 1], [2, 2, 2], [1, 2, 6])
    assert predict(m, [-4.0]) == pytest.approx(3.0)


def test_predict_rejects_nonfinite():
    with pytest.raises(ValueError):
        predict(model_1d([0, 2], [1, 1], [0, 10]), [np.nan])


@pytest.mark.criterion(8)
@settings(max_examples=100, deadline=None)
@given(st.floats(-1e4, 1e4), st.integers(0, 1000))
def test_prediction_bounded(x, seed):
    rng = np.random.default_rng(seed)
    h = 4
    m = model_1d(rng.normal(size=h), rng.uniform(0.01, 3, size=h), rng.normal(size=h) * 5)
    v = predict(m, [x])
    assert m.response_means.min() - 1e-12 <= v <= m.response_means.max() + 1e-12


def test_predict_matrix_input():
    m = model_1d([0, 2], [1, 1], [0, 10])
    out = predict(m, np.array([[0.0], [1.0]]))
    assert out.shape == (2,)


def test_ssoda_requires_continuous_response_and_h():
    data = Dataset(np.ones((4, 1)) * np.arange(4)[:, None], np.array([0, 1, 0, 1]))
    with pytest.raises(DataError):
        s_soda_select(data)
    cont = Dataset(np.arange(4.0)[:, None], np.arange(4.0), categorical=False)
    with pytest.raises(ValueError):
        s_soda_select(cont, H=1)
    with pytest.raises(HTooLarge):
        s_soda_select(cont, H=5)


def test_ssoda_null_selects_nothing():
    empty = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        data = Dataset(rng.standard_normal((200, 20)), rng.standard_normal(200), categorical=False)
        empty += len(s_soda_select(data, 5).selected) == 0
    assert empty >= 18


def test_ssoda_example_21_small_p():
    data, truth, _ = gen_regression("2.1", "a", n=200, p=100, seed=1)
    res = s_soda_select(data, 5)
    assert res.predictors == truth


def variance_predictor_hits(gamma, reps=10):
    cfg = SelectionConfig(gamma=gamma, separation="boundary")
    hits = 0
    for rep in range(reps):
        data, _, _ = gen_regression("2.5", "a", n=200, p=50, seed=2, replicate=rep)
        hits += 2 in s_soda_select(data, 5, cfg).predictors
    return hits


@pytest.mark.xfail(strict=True, reason="X3 only scales the noise; its likelihood-ratio gain "
                   "(about 15-30 on 4 df at n=200) is below the gamma=0.5 penalty of "
                   "4 * (log n + log p) per term")
def test_ssoda_example_25_variance_predictor_default_gamma():
    assert variance_predictor_hits(0.5) >= 8


def test_ssoda_example_25_variance_predictor_gamma_zero():
    assert variance_predictor_hits(0.0) >= 8


def test_ssoda_explicit_config_is_respected():
    data, _, _ = gen_regression("2.1", "b", n=200, p=40, seed=3)
    cfg = SelectionConfig(gamma=1.0, separation="boundary")
    assert s_soda_select(data, 5, cfg).gamma_used == 1.0
