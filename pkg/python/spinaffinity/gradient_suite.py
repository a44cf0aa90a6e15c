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
"""Finite-difference checks of every primitive and of the end-to-end loss."""

import collections
import logging

import numpy as np

from . import autodiff as ad
from . import physics
from . import synthetic
from . import training
from .model import SpinModel
from .transformer import ModelConfig

logger = logging.getLogger(__name__)

GradCheckResult = collections.namedtuple(
    'GradCheckResult', ['name', 'seed', 'max_rel_error', 'num_checked', 'passed'])

E2E_MODEL_CONFIG = {
    'hidden_dim': 8,
    'num_layers': 2,
    'num_heads': 2,
    'k': 4,
}

E2E_ENTRIES_PER_TENSOR = 3


def _positive(rng, shape):
    return rng.uniform(0.5, 2.0, size=shape)


def primitive_cases(rng):
    """Returns an ordered {name: (f, x)} of scalar test functions."""
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(4, 2))
    row = rng.normal(size=(4, ))
    weights = rng.normal(size=(3, 4))
    denominator = _positive(rng, (3, 4))
    segments = np.array([0, 2, 0, 1, 2, 2])
    indices = np.array([2, 0, 2, 1])

    def weighted(t):
        return ad.sum(ad.mul(t, weights))

    cases = collections.OrderedDict()
    cases['matmul'] = (lambda x: ad.sum(ad.square(ad.matmul(x, b))), a)
    cases['matmul_right'] = (lambda x: ad.sum(ad.square(ad.matmul(a, x))), b)
    cases['transpose'] = (lambda x: ad.sum(ad.mul(ad.transpose(x), weights.T)), a)
    cases['add'] = (lambda x: ad.sum(ad.square(ad.add(a, x))), row)
    cases['sub'] = (lambda x: ad.sum(ad.square(ad.sub(a, x))), row)
    cases['mul'] = (lambda x: ad.sum(ad.square(ad.mul(x, row))), a)
    cases['scalar_mul'] = (lambda x: weighted(ad.scalar_mul(x, -1.7)), a)
    cases['divide_numerator'] = (lambda x: weighted(ad.divide(x, denominator)), a)
    cases['divide_denominator'] = (lambda x: weighted(ad.divide(a, x)), _positive(rng, (3, 4)))
    cases['power'] = (lambda x: weighted(ad.power(x, 3)), _positive(rng, (3, 4)))
    cases['exp'] = (lambda x: weighted(ad.exp(x)), a)
    cases['tanh'] = (lambda x: weighted(ad.tanh(x)), a)
    cases['sum_axis'] = (lambda x: ad.sum(ad.square(ad.sum(x, axis=1))), a)
    cases['concat'] = (lambda x: ad.sum(ad.square(ad.concat([x, a], axis=1))), a)
    cases['gather_rows'] = (lambda x: ad.sum(ad.square(ad.gather_rows(x, indices))), a)
    cases['square'] = (lambda x: weighted(ad.square(x)), a)
    cases['reshape'] = (lambda x: ad.sum(ad.square(ad.reshape(x, (4, 3)))), a)
    cases['relu'] = (lambda x: weighted(ad.relu(x)), a)
    cases['swish'] = (lambda x: weighted(ad.swish(x)), a)
    cases['softmax'] = (lambda x: weighted(ad.softmax(x)), a)
    edge_weights = rng.normal(size=(6, 2))
    cases['segment_softmax'] = (
        lambda x: ad.sum(ad.mul(ad.segment_softmax(x, segments, 3), edge_weights)),
        rng.normal(size=(6, 2)))
    cases['segment_sum'] = (lambda x: ad.sum(ad.square(ad.segment_sum(x, segments, 3))),
                            rng.normal(size=(6, 2)))
    cases['layer_norm'] = (lambda x: weighted(ad.layer_norm(x, row, row[::-1].copy())), a)
    d = rng.uniform(3.0, 6.0, size=(2, 3))
    u = rng.uniform(3.0, 4.0, size=(2, 3))
    cases['lj_energy_offset'] = (lambda x: ad.sum(physics.lj_energy(ad.add(u, x), d)),
                                 rng.uniform(-0.5, 0.5, size=(2, 3)))
    cases['lj_energy_distance'] = (lambda x: ad.sum(physics.lj_energy(u, x)), d)
    cases['lj_residual_offset'] = (
        lambda x: ad.sum(ad.square(physics.lj_energy_derivative(ad.add(u, x), d))),
        rng.uniform(-0.5, 0.5, size=(2, 3)))
    return cases


def check_primitives(seed, tol=1e-4, abs_floor=1e-6, step=1e-5):
    rng = np.random.default_rng(seed)
    results = []
    for name, (f, x) in primitive_cases(rng).items():
        report = ad.grad_check(f, x, step=step, tol=tol, abs_floor=abs_floor)
        results.append(
            GradCheckResult(name, seed, report.max_rel_error, report.num_checked, report.passed))
    return results


def check_end_to_end(seed, tol=1e-4, abs_floor=1e-6, step=1e-5,
                     entries_per_tensor=E2E_ENTRIES_PER_TENSOR):
    """Checks d(L_d + L_p)/d(param) for every parameter tensor of a small random model."""
    rng = np.random.default_rng(seed)
    cfg = ModelConfig(dict(E2E_MODEL_CONFIG, init_seed=seed))
    model = SpinModel(cfg)
    dataset = synthetic.gen_synthetic(seed, 2, protein_size_range=(4, 6),
                                      ligand_size_range=(2, 3))
    batch = [model.prepare(c) for c in dataset]
    train_config = training.TrainConfig()
    results = []
    for name, parameter in model.parameters().items():

        def f(x, name=name):
            tensors = model.tensors()
            tensors[name] = x
            return training.loss_total(model, batch, train_config, tensors=tensors).total

        report = ad.grad_check(f,
                               parameter.value,
                               step=step,
                               tol=tol,
                               abs_floor=abs_floor,
                               max_entries=entries_per_tensor,
                               rng=rng)
        results.append(
            GradCheckResult('loss_total:' + name, seed, report.max_rel_error, report.num_checked,
                            report.passed))
    return results


def run_gradient_suite(seeds=20, tol=1e-4, abs_floor=1e-6, step=1e-5):
    """Runs primitive and end-to-end checks for seeds 0 .. seeds-1."""
    results = []
    for seed in range(seeds):
        results.extend(check_primitives(seed, tol=tol, abs_floor=abs_floor, step=step))
        results.extend(check_end_to_end(seed, tol=tol, abs_floor=abs_floor, step=step))
        logger.info('gradient checks for seed %d done', seed)
    return results
