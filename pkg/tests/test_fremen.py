"""Spectral visibility model: accumulator oracles, least-squares cross-check."""

import numpy as np
import pytest

from longnav.fremen import DEFAULT_PERIODS, FremenModel, predict_many

DAY = 86400.0


def test_single_observation():
    m = FremenModel()
    m.add_observation(1.0, 0.0)
    assert m.n_obs == 1
    assert m.mean_score() == pytest.approx(1.0)
    # at t=0 every component sees cos=1, sin=0
    assert m.predict(0.0, order=2) == pytest.approx(1.0)
    assert m.predict(0.0, order=0) == pytest.approx(1.0)


def test_mean_is_running_average():
    m = FremenModel()
    m.add_observation(1.0, 0.0)
    m.add_observation(-1.0, 3600.0)
    assert m.mean_score() == pytest.approx(0.0, abs=1e-15)

    rng = np.random.default_rng(0)
    vals = rng.uniform(-1, 1, size=200)
    m2 = FremenModel()
    for i, v in enumerate(vals):
        m2.add_observation(float(v), i * 3600.0)
    assert m2.mean_score() == pytest.approx(vals.mean(), abs=1e-12)


def test_empty_model_predicts_zero():
    m = FremenModel()
    assert m.predict(12345.0) == 0.0
    assert m.dominant_components() == []


def test_observation_validation():
    m = FremenModel()
    with pytest.raises(ValueError):
        m.add_observation(1.5, 0.0)
    with pytest.raises(ValueError):
        m.add_observation(-1.1, 0.0)
    with pytest.raises(ValueError):
        m.add_observation(0.5, float("nan"))


def planted_cosine(periods, amps, phases, times, mean=0.0):
    v = np.full(len(times), mean)
    for p, a, ph in zip(periods, amps, phases):
        v = v + a * np.cos(2 * np.pi * np.asarray(times) / p + ph)
    return np.clip(v, -1.0, 1.0)


def feed(values, times, periods=DEFAULT_PERIODS):
    m = FremenModel(periods)
    for v, t in zip(values, times):
        m.add_observation(float(v), float(t))
    return m


def test_accumulators_match_direct_complex_mean():
    # oracle: gamma_j must equal mean(v * exp(-i w t)) computed by numpy
    times = np.arange(0, 14 * DAY, 3600.0)
    vals = planted_cosine([DAY], [0.5], [0.0], times, mean=0.3)
    m = feed(vals, times)
    for j, p in enumerate(m.periods):
        w = 2 * np.pi / p
        g = np.mean(vals * np.exp(-1j * w * times))
        assert m._re[j] == pytest.approx(g.real, abs=1e-12)
        assert m._im[j] == pytest.approx(g.imag, abs=1e-12)
    # the day component carries half the cosine amplitude, the rest noise floor
    day = np.argmin(np.abs(np.asarray(m.periods) - DAY))
    assert np.hypot(m._re[day], m._im[day]) == pytest.approx(0.25, abs=0.02)
    for j in range(len(m.periods)):
        if j != day:
            assert np.hypot(m._re[j], m._im[j]) <= 0.1


def test_dominant_components_planted_pair():
    times = np.arange(0, 14 * DAY, 3600.0)
    vals = planted_cosine([DAY, DAY / 2], [0.4, 0.2], [0.3, -0.7], times)
    m = feed(vals, times)
    comps = m.dominant_components(2)
    assert comps[0][0] == pytest.approx(DAY)
    assert comps[1][0] == pytest.approx(DAY / 2)
    assert comps[0][1] == pytest.approx(0.4, rel=0.10)
    assert comps[1][1] == pytest.approx(0.2, rel=0.10)


def test_predict_against_least_squares_oracle():
    times = np.arange(0, 14 * DAY, 3600.0)
    vals = planted_cosine([DAY], [0.45], [0.5], times, mean=0.2)
    m = feed(vals, times)

    # oracle: direct lstsq fit of mean + one cosine at the known period
    w = 2 * np.pi / DAY
    A = np.column_stack([np.ones_like(times), np.cos(w * times), np.sin(w * times)])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)

    rng = np.random.default_rng(1)
    held = rng.uniform(0, 20 * DAY, size=100)
    ref = coef[0] + coef[1] * np.cos(w * held) + coef[2] * np.sin(w * held)
    got = np.array([m.predict(float(t), order=1) for t in held])
    rms = np.sqrt(np.mean((got - np.clip(ref, -1, 1)) ** 2))
    assert rms <= 0.05


def test_order_zero_is_mean():
    rng = np.random.default_rng(2)
    times = np.sort(rng.uniform(0, 30 * DAY, size=50))
    vals = rng.uniform(-1, 1, size=50)
    m = feed(vals, times)
    assert m.predict(5 * DAY, order=0) == pytest.approx(
        np.clip(vals.mean(), -1, 1), abs=1e-12)


def test_observation_order_invariance():
    rng = np.random.default_rng(3)
    times = rng.uniform(0, 30 * DAY, size=120)
    vals = rng.uniform(-1, 1, size=120)
    m1 = feed(vals, times)
    perm = rng.permutation(120)
    m2 = feed(vals[perm], times[perm])
    assert m1.mean_score() == pytest.approx(m2.mean_score(), abs=1e-9)
    np.testing.assert_allclose(m1._re, m2._re, atol=1e-9)
    np.testing.assert_allclose(m1._im, m2._im, atol=1e-9)


def test_predict_bounded():
    rng = np.random.default_rng(4)
    times = rng.uniform(0, 60 * DAY, size=40)
    m = feed(np.where(rng.random(40) < 0.5, -1.0, 1.0), times)
    for t in rng.uniform(-10 * DAY, 90 * DAY, size=200):
        assert -1.0 <= m.predict(float(t), order=5) <= 1.0


def test_training_mse_non_increasing_in_order():
    times = np.arange(0, 14 * DAY, 3600.0)
    vals = planted_cosine([DAY, DAY / 3], [0.4, 0.25], [0.0, 1.1], times)
    m = feed(vals, times)
    errs = []
    for k in range(4):
        pred = np.array([m.predict(float(t), order=k) for t in times])
        errs.append(np.mean((pred - vals) ** 2))
    for a, b in zip(errs, errs[1:]):
        assert b <= a + 1e-9


def test_predict_many_matches_scalar_path():
    rng = np.random.default_rng(5)
    models = []
    for _ in range(8):
        n = int(rng.integers(0, 30))
        models.append(feed(rng.uniform(-1, 1, size=n),
                           rng.uniform(0, 30 * DAY, size=n)))
    for t in (0.0, 3.7 * DAY, 55 * DAY):
        batch = predict_many(models, t, order=2)
        single = np.array([m.predict(t, order=2) for m in models])
        np.testing.assert_allclose(batch, single, atol=1e-12)


def test_serialization_round_trip():
    rng = np.random.default_rng(6)
    m = feed(rng.uniform(-1, 1, size=37), rng.uniform(0, 40 * DAY, size=37))
    m2 = FremenModel.from_dict(m.to_dict())
    assert m2.n_obs == m.n_obs
    assert m2.mu == m.mu
    assert m2.periods == m.periods
    np.testing.assert_array_equal(m2._re, m._re)
    np.testing.assert_array_equal(m2._im, m._im)
    for t in rng.uniform(0, 60 * DAY, size=20):
        assert m2.predict(float(t)) == m.predict(float(t))
