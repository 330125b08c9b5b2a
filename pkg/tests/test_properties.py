"""Property tests over the pure numeric functions."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from uqnet.metrics import ClassificationMetrics
from uqnet.report import build_report
from uqnet.uncertainty import kld, predictive_entropy

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0.01, 10.0)), min_size=1, max_size=8))
def test_kld_is_nonnegative(pairs):
    mu = np.array([m for m, _ in pairs])
    s2 = np.array([s for _, s in pairs])
    assert kld(mu, s2) >= 0.0


@given(st.integers(1, 6), st.data())
def test_entropy_bounded_by_log_c(c, data):
    weights = np.array(data.draw(st.lists(st.floats(1e-6, 1.0), min_size=c, max_size=c)))
    p = weights / weights.sum()
    h = predictive_entropy(p)
    assert -1e-12 <= h <= np.log(c) + 1e-9


@settings(deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.01, 1000.0))
def test_ratio_scale_invariance(seed, scale):
    rng = np.random.default_rng(seed)
    n = 40
    y_true = rng.integers(0, 3, size=n)
    y_pred = rng.integers(0, 3, size=n)
    if (y_true == y_pred).all() or (y_true != y_pred).all():
        return  # ratio undefined for single-group outcomes
    scores = rng.uniform(0.01, 1.0, size=n)
    ent = np.zeros(n)
    base = build_report(y_true, y_pred, scores, ent, "mc-dropout").ratio
    scaled = build_report(y_true, y_pred, scale * scores, ent, "mc-dropout").ratio
    assert abs(base - scaled) <= 1e-9 * max(base, scaled)


@given(st.integers(2, 5), st.integers(1, 60), st.integers(0, 10 ** 6))
def test_metrics_stay_in_unit_interval(c, n, seed):
    rng = np.random.default_rng(seed)
    m = ClassificationMetrics.from_predictions(
        rng.integers(0, c, size=n), rng.integers(0, c, size=n), c)
    for arr in (m.precision, m.recall, m.f1):
        assert np.all((arr >= 0.0) & (arr <= 1.0))
    assert 0.0 <= m.accuracy <= 1.0
    assert m.confusion.sum() == n
