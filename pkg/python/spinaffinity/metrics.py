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
"""Scoring and ranking metrics."""

import collections
import math

import numpy as np
import pandas as pd
import scipy.stats

RANKING_METHODS = ('spearman', 'kendall')


class UndefinedMetricError(ValueError):
    pass


MetricsReport = collections.namedtuple('MetricsReport', ['rmse', 'mae', 'sd', 'pearson_r', 'n'])

ClusterMember = collections.namedtuple('ClusterMember',
                                       ['complex_id', 'true_affinity', 'predicted_affinity'])


class Cluster(object):
    """Complexes sharing one target, ranked against each other."""

    __slots__ = ('target_id', 'members')

    def __init__(self, target_id, members):
        members = tuple(ClusterMember(*m) for m in members)
        ids = [m.complex_id for m in members]
        if len(set(ids)) != len(ids):
            raise ValueError('cluster %r has duplicate member ids' % (target_id, ))
        self.target_id = target_id
        self.members = members

    @property
    def true_affinities(self):
        return np.array([m.true_affinity for m in self.members], dtype=np.float64)

    @property
    def predicted_affinities(self):
        return np.array([m.predicted_affinity for m in self.members], dtype=np.float64)

    def __repr__(self):
        return 'Cluster(%r, %d members)' % (self.target_id, len(self.members))


def _paired(y, y_hat, min_length=1):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    if y.shape != y_hat.shape:
        raise UndefinedMetricError('length mismatch: %d labels, %d predictions' %
                                   (y.shape[0], y_hat.shape[0]))
    if y.shape[0] < min_length:
        raise UndefinedMetricError('at least %d samples required, but received %d' %
                                   (min_length, y.shape[0]))
    return y, y_hat


def _is_constant(x):
    return bool(np.all(x == x[0]))


def rmse(y, y_hat):
    y, y_hat = _paired(y, y_hat)
    return math.sqrt(float(np.mean((y - y_hat)**2)))


def mae(y, y_hat):
    y, y_hat = _paired(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def pearson(y, y_hat):
    y, y_hat = _paired(y, y_hat, min_length=2)
    if _is_constant(y) or _is_constant(y_hat):
        raise UndefinedMetricError('correlation is undefined for constant input')
    r = float(scipy.stats.pearsonr(y, y_hat)[0])
    return min(1.0, max(-1.0, r))


def sd_regression(y, y_hat):
    """Residual standard deviation of the least-squares fit y ~ a + b * y_hat (n - 1)."""
    y, y_hat = _paired(y, y_hat, min_length=3)
    if _is_constant(y_hat):
        raise UndefinedMetricError('regression SD is undefined for constant predictions')
    x_mean = y_hat.mean()
    y_mean = y.mean()
    dx = y_hat - x_mean
    slope = float(np.dot(dx, y - y_mean) / np.dot(dx, dx))
    intercept = y_mean - slope * x_mean
    residuals = y - (intercept + slope * y_hat)
    return math.sqrt(float(np.dot(residuals, residuals)) / (y.shape[0] - 1))


def spearman(y, y_hat):
    """Spearman's rho.

    Without ties this is 1 - 6 sum(d^2) / (n (n^2 - 1)) over integer ranks;
    with ties it is the Pearson correlation of average ranks.
    """
    y, y_hat = _paired(y, y_hat, min_length=2)
    if _is_constant(y) or _is_constant(y_hat):
        raise UndefinedMetricError('rank correlation is undefined for all-tied input')
    rank_y = scipy.stats.rankdata(y)
    rank_y_hat = scipy.stats.rankdata(y_hat)
    n = y.shape[0]
    if len(np.unique(y)) == n and len(np.unique(y_hat)) == n:
        d_squared = int(np.sum((rank_y.astype(np.int64) - rank_y_hat.astype(np.int64))**2))
        return 1.0 - float(6 * d_squared) / float(n * (n * n - 1))
    return pearson(rank_y, rank_y_hat)


def kendall(y, y_hat):
    """Kendall's tau-b."""
    y, y_hat = _paired(y, y_hat, min_length=2)
    if _is_constant(y) or _is_constant(y_hat):
        raise UndefinedMetricError('rank correlation is undefined for all-tied input')
    return float(scipy.stats.kendalltau(y, y_hat)[0])


def ranking_power(clusters, method='spearman'):
    """Unweighted mean over clusters of the rank correlation of true vs predicted."""
    if method not in RANKING_METHODS:
        raise ValueError('unknown ranking method %r' % (method, ))
    clusters = list(clusters)
    if not clusters:
        raise UndefinedMetricError('ranking power requires at least one cluster')
    fn = spearman if method == 'spearman' else kendall
    values = []
    for cluster in clusters:
        if len(cluster.members) < 2:
            raise UndefinedMetricError('cluster %r has fewer than 2 members' %
                                       (cluster.target_id, ))
        try:
            values.append(fn(cluster.true_affinities, cluster.predicted_affinities))
        except UndefinedMetricError as e:
            raise UndefinedMetricError('cluster %r: %s' % (cluster.target_id, e))
    return float(np.mean(values))


def metrics_report(y, y_hat):
    """All regression metrics; `sd` and `pearson_r` are NaN where undefined."""
    y, y_hat = _paired(y, y_hat)

    def maybe(fn):
        try:
            return fn(y, y_hat)
        except UndefinedMetricError:
            return float('nan')

    return MetricsReport(rmse=rmse(y, y_hat),
                         mae=mae(y, y_hat),
                         sd=maybe(sd_regression),
                         pearson_r=maybe(pearson),
                         n=int(y.shape[0]))


def report_frame(report):
    """`metric,value` rows."""
    return pd.DataFrame({'metric': list(report._fields), 'value': list(report)},
                        columns=['metric', 'value'])


def write_metrics_csv(report, path):
    report_frame(report).to_csv(path, index=False, float_format='%.10g', na_rep='nan')
