# @license
# Copyright 2024 The spinaffinity Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Tests for metrics.py"""

import math

import numpy as np
import pandas as pd
import pytest

from spinaffinity import metrics


def test_perfect_prediction():
    y = [1.0, 2.5, 4.0]
    assert metrics.rmse(y, y) == 0
    assert metrics.mae(y, y) == 0


def test_rmse_mae_direct():
    assert metrics.rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5), rel=1e-12)
    assert metrics.mae([0, 0], [3, 4]) == 3.5


def test_single_error():
    assert metrics.rmse([2.0], [-1.5]) == 3.5
    assert metrics.mae([2.0], [-1.5]) == 3.5


def test_length_mismatch():
    with pytest.raises(metrics.UndefinedMetricError):
        metrics.rmse([1, 2], [1])


def test_pearson():
    y = np.array([0.5, 1.0, 3.0, 2.0])
    assert metrics.pearson(y, 2 * y + 1) == pytest.approx(1.0, rel=1e-12)
    assert metrics.pearson(y, -y) == pytest.approx(-1.0, rel=1e-12)


def test_pearson_constant_input():
    with pytest.raises(metrics.UndefinedMetricError):
        metrics.pearson([1, 2, 3], [5, 5, 5])


def test_sd_regression():
    y = np.array([0.5, 1.0, 3.0, 2.0])
    assert metrics.sd_regression(y, 3 * y - 2) == pytest.approx(0.0, abs=1e-12)
    assert metrics.sd_regression([0, 1, 2], [0, 1, 1]) == pytest.approx(0.5, rel=1e-12)


def test_sd_regression_needs_three_samples():
    with pytest.raises(metrics.UndefinedMetricError):
        metrics.sd_regression([0, 1], [0, 1])


def test_spearman():
    assert metrics.spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    assert metrics.spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    assert metrics.spearman([1, 2, 3, 4, 5], [1, 3, 2, 4, 5]) == 0.9


def test_spearman_uses_average_ranks_for_ties():
    # rankdata([1, 1, 2]) == [1.5, 1.5, 3]
    expected = metrics.pearson([1.5, 1.5, 3], [1, 2, 3])
    assert metrics.spearman([1, 1, 2], [1, 2, 3]) == pytest.approx(expected, rel=1e-12)


def _two_pass_pearson(x, y):
    x_mean = math.fsum(x) / len(x)
    y_mean = math.fsum(y) / len(y)
    dx = [a - x_mean for a in x]
    dy = [b - y_mean for b in y]
    return (math.fsum(a * b for a, b in zip(dx, dy)) /
            math.sqrt(math.fsum(a * a for a in dx) * math.fsum(b * b for b in dy)))


def _ranks(x):
    ranks = [0] * len(x)
    for rank, index in enumerate(sorted(range(len(x)), key=lambda i: x[i])):
        ranks[index] = rank + 1
    return ranks


@pytest.mark.parametrize('seed', range(3))
def test_metrics_match_oracles_on_random_vectors(seed):
    rng = np.random.default_rng(seed)
    y = rng.normal(6, 2, size=100).tolist()
    y_hat = (np.array(y) + rng.normal(0, 1, size=100)).tolist()
    n = len(y)
    assert metrics.rmse(y, y_hat) == pytest.approx(
        math.sqrt(math.fsum((a - b)**2 for a, b in zip(y, y_hat)) / n), abs=1e-12)
    assert metrics.mae(y, y_hat) == pytest.approx(
        math.fsum(abs(a - b) for a, b in zip(y, y_hat)) / n, abs=1e-12)
    assert metrics.pearson(y, y_hat) == pytest.approx(_two_pass_pearson(y, y_hat), abs=1e-12)
    assert metrics.spearman(y, y_hat) == pytest.approx(
        _two_pass_pearson(_ranks(y), _ranks(y_hat)), abs=1e-12)


def test_spearman_invariant_under_monotone_transforms():
    rng = np.random.default_rng(4)
    y = rng.normal(size=50)
    y_hat = y + rng.normal(scale=0.5, size=50)
    expected = metrics.spearman(y, y_hat)
    assert metrics.spearman(np.exp(y), y_hat) == expected
    assert metrics.spearman(y, 3 * y_hat**3 + 7) == expected
    assert metrics.kendall(np.exp(y), y_hat) == pytest.approx(metrics.kendall(y, y_hat),
                                                              abs=1e-12)


def test_metrics_invariant_under_sample_permutation():
    rng = np.random.default_rng(5)
    y = rng.normal(size=40)
    y_hat = y + rng.normal(scale=0.3, size=40)
    order = rng.permutation(40)
    for metric in (metrics.rmse, metrics.mae, metrics.pearson, metrics.sd_regression,
                   metrics.spearman, metrics.kendall):
        assert metric(y[order], y_hat[order]) == pytest.approx(metric(y, y_hat), abs=1e-12)


def test_kendall():
    assert metrics.kendall([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert metrics.kendall([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def _cluster(target_id, true, predicted):
    return metrics.Cluster(target_id,
                           [('%s_%d' % (target_id, i), t, p)
                            for i, (t, p) in enumerate(zip(true, predicted))])


def test_ranking_power_perfect():
    clusters = [
        _cluster('a', [1, 2, 3], [0.1, 0.2, 0.3]),
        _cluster('b', [5, 4, 6, 7], [1, 0, 2, 3]),
    ]
    assert metrics.ranking_power(clusters) == pytest.approx(1.0)
    assert metrics.ranking_power(clusters, method='kendall') == pytest.approx(1.0)


def test_ranking_power_is_unweighted_mean():
    clusters = [
        _cluster('a', [1, 2, 3], [3, 2, 1]),
        _cluster('b', [1, 2, 3, 4, 5], [1, 3, 2, 4, 5]),
    ]
    assert metrics.ranking_power(clusters) == pytest.approx((-1.0 + 0.9) / 2, rel=1e-12)


def test_ranking_power_rejects_small_cluster():
    with pytest.raises(metrics.UndefinedMetricError):
        metrics.ranking_power([_cluster('a', [1], [1])])
    with pytest.raises(metrics.UndefinedMetricError):
        metrics.ranking_power([])
    with pytest.raises(ValueError):
        metrics.ranking_power([_cluster('a', [1, 2], [1, 2])], method='pearson')


def test_metrics_report_marks_undefined():
    report = metrics.metrics_report([1.0, 2.0], [1.5, 1.5])
    assert report.n == 2
    assert report.rmse == 0.5
    assert math.isnan(report.sd)
    assert math.isnan(report.pearson_r)


def test_write_metrics_csv(tmp_path):
    path = str(tmp_path / 'metrics.csv')
    metrics.write_metrics_csv(metrics.metrics_report([0, 1, 2], [0, 1, 1]), path)
    frame = pd.read_csv(path)
    assert list(frame['metric']) == ['rmse', 'mae', 'sd', 'pearson_r', 'n']
    assert frame['value'][2] == pytest.approx(0.5)
