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
"""Trains the model with geometry and/or the physics loss switched off."""

import collections
import copy
import logging

import pandas as pd

from . import metrics
from . import training

logger = logging.getLogger(__name__)

VARIANTS = collections.OrderedDict([
    ('full', {}),
    ('without_geometry', {'disable_geometry': True}),
    ('without_physics', {'disable_physics_loss': True}),
    ('without_both', {'disable_geometry': True, 'disable_physics_loss': True}),
])


def variant_train_config(train_config, variant):
    cfg = copy.deepcopy(train_config)
    for key, value in VARIANTS[variant].items():
        setattr(cfg, key, value)
    return cfg


def run_ablation(dataset, run_config, variants=None):
    """Trains each variant on the `train` split and scores it on the `test` split.

    Returns an ordered {variant: MetricsReport}.
    """
    if variants is None:
        variants = list(VARIANTS)
    test_set = dataset.split('test')
    if not test_set:
        raise training.EmptyDatasetError('ablation requires a nonempty test split')
    labels = [c.affinity for c in test_set]
    reports = collections.OrderedDict()
    for variant in variants:
        if variant not in VARIANTS:
            raise ValueError('unknown ablation variant %r' % (variant, ))
        result = training.train(dataset, variant_train_config(run_config.train, variant),
                                run_config.model, run_config.physics)
        predictions = [result.model.predict(c) for c in test_set]
        reports[variant] = metrics.metrics_report(labels, predictions)
        logger.info('%s: %r', variant, reports[variant])
    return reports


def ablation_frame(reports):
    rows = []
    for variant, report in reports.items():
        row = collections.OrderedDict([('variant', variant)])
        row.update(report._asdict())
        rows.append(row)
    return pd.DataFrame(rows, columns=['variant'] + list(metrics.MetricsReport._fields))


def write_ablation_csv(reports, path):
    ablation_frame(reports).to_csv(path, index=False, float_format='%.10g', na_rep='nan')
