import math

import numpy as np
import pytest
from scipy.spatial.distance import jensenshannon
from scipy.stats import pearsonr

from promrep import metrics
from promrep.errors import InvalidArgument
from promrep.represent import Posteriorgram


def test_jsd_hand_example():
    # [1, 0] vs [0.5, 0.5]: 3/4 log2(4/3)
    got = metrics.ppg_jsd(np.array([[1.0, 0.0]]), np.array([[0.5, 0.5]]))
    assert got == pytest.approx(0.75 * math.log2(4 / 3), abs=1e-12)
    assert got == pytest.approx(0.311278, abs=1e-6)


def test_jsd_matches_scipy(rng):
    p, q = rng.dirichlet(np.ones(40), 50), rng.dirichlet(np.full(40, 0.2), 50)
    expected = np.mean(jensenshannon(p, q, axis=1, base=2) ** 2)
    assert metrics.ppg_jsd(p, q) == pytest.approx(expected, abs=1e-12)


def test_jsd_label_check():
    a = Posteriorgram(np.array([[1.0, 0.0]]), ("x", "y"))
    b = Posteriorgram(np.array([[1.0, 0.0]]), ("y", "x"))
    with pytest.raises(InvalidArgument):
        metrics.ppg_jsd(a, b)


def test_pitch_error_uses_joint_voicing():
    ref = np.array([100.0, 200.0, 300.0])
    est = np.array([200.0, 200.0, 150.0])
    assert metrics.pitch_error_cents(ref, est, [True, True, False], [True, True, True]) == \
        pytest.approx(600.0)
    assert math.isnan(metrics.pitch_error_cents(ref, est, [False] * 3, [True] * 3))


def test_periodicity_rmse():
    assert metrics.periodicity_rmse([0.0, 1.0], [0.0, 0.0]) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(InvalidArgument):
        metrics.periodicity_rmse([0.0], [0.0, 1.0])


def test_loudness_skips_silent_frames():
    ref = np.array([[-10.0, -20.0], [-100.0, -100.0]])
    est = np.array([[-12.0, -21.0], [0.0, 0.0]])
    assert metrics.loudness_error_dba(ref, est) == pytest.approx(1.5)
    assert math.isnan(metrics.loudness_error_dba(ref[1:], est[1:]))


def test_pearson(rng):
    assert metrics.pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(0.981981, abs=1e-6)
    a, b = rng.normal(size=100), rng.normal(size=100)
    assert metrics.pearson(a, b) == pytest.approx(pearsonr(a, b)[0], abs=1e-12)
    assert math.isnan(metrics.pearson([1.0, 1.0], [1.0, 2.0]))
