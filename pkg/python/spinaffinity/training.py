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
"""Training under L = w_d * L_d + w_p * L_p with Adam and a plateau schedule."""

import collections
import copy
import logging
import math

import numpy as np
import pandas as pd

from . import autodiff as ad
from . import metrics
from .checkpoint import ModelCheckpoint
from .json_wrappers import ConfigError, JsonObjectWrapper, wrapped_property
from .model import SpinModel

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

HISTORY_COLUMNS = ('epoch', 'lr', 'loss_total', 'loss_data', 'loss_physics', 'val_rmse',
                   'val_pearson')


class NonFiniteLossError(FloatingPointError):
    def __init__(self, message, complex_id=None):
        super(NonFiniteLossError, self).__init__(message)
        self.complex_id = complex_id


class EmptyDatasetError(ValueError):
    pass


class TrainConfig(JsonObjectWrapper):
    __slots__ = ()

    learning_rate = wrapped_property('learning_rate', float, default=1e-3)
    lr_decay_factor = wrapped_property('lr_decay_factor', float, default=0.6)
    lr_min = wrapped_property('lr_min', float, default=1e-6)
    plateau_patience = wrapped_property('plateau_patience',
                                        int,
                                        default=20,
                                        doc='Evaluations without improvement before decay.')
    max_epochs = wrapped_property('max_epochs', int, default=100)
    batch_size = wrapped_property('batch_size', int, default=8)
    seed = wrapped_property('seed', int, default=0)
    loss_weight_data = wrapped_property('loss_weight_data', float, default=1.0)
    loss_weight_physics = wrapped_property('loss_weight_physics', float, default=1.0)
    normalize_by_batch = wrapped_property('normalize_by_batch', bool, default=False)
    grad_clip_norm = wrapped_property('grad_clip_norm', float, default=10.0)
    disable_physics_loss = wrapped_property('disable_physics_loss', bool, default=False)
    disable_geometry = wrapped_property('disable_geometry', bool, default=False)

    def validate(self):
        if not 0 < self.lr_decay_factor < 1:
            raise ConfigError('lr_decay_factor must be in (0, 1), but received: %r' %
                              (self.lr_decay_factor, ))
        if not self.lr_min > 0:
            raise ConfigError('lr_min must be positive, but received: %r' % (self.lr_min, ))
        if not self.learning_rate > 0:
            raise ConfigError('learning_rate must be positive, but received: %r' %
                              (self.learning_rate, ))
        if self.plateau_patience < 1:
            raise ConfigError('plateau_patience must be >= 1, but received: %d' %
                              (self.plateau_patience, ))
        if self.max_epochs < 0:
            raise ConfigError('max_epochs must be >= 0')
        if self.batch_size < 1:
            raise ConfigError('batch_size must be >= 1, but received: %d' % (self.batch_size, ))
        if not self.grad_clip_norm > 0:
            raise ConfigError('grad_clip_norm must be positive')
        return self


def _stack(predictions):
    if isinstance(predictions, ad.Tensor):
        return ad.reshape(predictions, (-1, ))
    return ad.concat([ad.reshape(ad.as_tensor(p), (1, )) for p in predictions], axis=0)


def loss_data(predictions, labels):
    """Sum of squared errors."""
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if isinstance(predictions, ad.Tensor):
        count = predictions.data.size
    else:
        count = len(predictions)
    if count != labels.shape[0]:
        raise ValueError('loss_data: %d predictions for %d labels' % (count, labels.shape[0]))
    if count == 0:
        raise ValueError('loss_data requires at least one sample')
    return ad.sum(ad.square(ad.sub(_stack(predictions), labels)))


LossBreakdown = collections.namedtuple('LossBreakdown',
                                       ['total', 'data', 'physics', 'predictions'])


def loss_total(model, batch, cfg, tape=None, tensors=None):
    """Returns the weighted objective and its components over a prepared batch.

    With disable_physics_loss the total is exactly w_d * L_d; L_p is still
    computed and returned as a diagnostic.
    """
    if not batch:
        raise EmptyDatasetError('loss_total requires a nonempty batch')
    if tensors is None:
        tensors = model.tensors(tape)
    predictions = []
    residuals = []
    for prepared in batch:
        if prepared.label is None:
            raise ValueError('complex %r has no affinity label' % (prepared.complex_id, ))
        try:
            result = model.forward(prepared, tape=tape, tensors=tensors)
        except ad.NonFiniteError as e:
            raise NonFiniteLossError('complex %r: %s' % (prepared.complex_id, e),
                                     complex_id=prepared.complex_id)
        predictions.append(result.prediction)
        residuals.append(result.residual)
    data = loss_data(predictions, [p.label for p in batch])
    physics_term = ad.sum(_stack(residuals))
    if cfg.normalize_by_batch:
        data = ad.scalar_mul(data, 1.0 / len(batch))
        physics_term = ad.scalar_mul(physics_term, 1.0 / len(batch))
    total = ad.scalar_mul(data, cfg.loss_weight_data)
    if not cfg.disable_physics_loss:
        total = ad.add(total, ad.scalar_mul(physics_term, cfg.loss_weight_physics))
    for prepared, p in zip(batch, predictions):
        if not math.isfinite(p.item()):
            raise NonFiniteLossError('complex %r produced a non-finite prediction' %
                                     (prepared.complex_id, ),
                                     complex_id=prepared.complex_id)
    return LossBreakdown(total=total,
                         data=data,
                         physics=physics_term,
                         predictions=[p.item() for p in predictions])


class AdamState(object):
    __slots__ = ('step', 'm', 'v')

    def __init__(self, step=0, m=None, v=None):
        self.step = step
        self.m = collections.OrderedDict() if m is None else m
        self.v = collections.OrderedDict() if v is None else v

    def copy(self):
        return AdamState(step=self.step,
                         m=collections.OrderedDict((k, a.copy()) for k, a in self.m.items()),
                         v=collections.OrderedDict((k, a.copy()) for k, a in self.v.items()))

    def to_json(self):
        return collections.OrderedDict([
            ('step', self.step),
            ('m', collections.OrderedDict((k, v.tolist()) for k, v in self.m.items())),
            ('v', collections.OrderedDict((k, v.tolist()) for k, v in self.v.items())),
        ])

    @staticmethod
    def from_json(obj):
        return AdamState(step=int(obj['step']),
                         m=collections.OrderedDict(
                             (k, np.array(v, dtype=np.float64)) for k, v in obj['m'].items()),
                         v=collections.OrderedDict(
                             (k, np.array(v, dtype=np.float64)) for k, v in obj['v'].items()))


def adam_step(params, grads, state, lr):
    """Updates `params` ({name: Parameter}) in place; returns `state`."""
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None or not p.requires_grad:
            continue
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.value.shape:
            raise ad.ShapeError('gradient for %r has shape %r, expected %r' %
                                (name, g.shape, p.value.shape))
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p.value)
            v = np.zeros_like(p.value)
        m = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1 - ADAM_BETA1**t)
        v_hat = v / (1 - ADAM_BETA2**t)
        p.value = p.value - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON)
    return state


def clip_gradients(grads, max_norm):
    """Rescales gradients to a global L2 norm of at most `max_norm`."""
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm <= max_norm or norm == 0:
        return grads, norm
    scale = max_norm / norm
    return collections.OrderedDict((k, g * scale) for k, g in grads.items()), norm


class PlateauSchedule(object):
    """Reduces the learning rate after `patience` evaluations without strict improvement."""

    __slots__ = ('lr', 'factor', 'lr_min', 'patience', 'best', 'num_bad')

    def __init__(self, lr, factor=0.6, lr_min=1e-6, patience=20):
        self.lr = lr
        self.factor = factor
        self.lr_min = lr_min
        self.patience = patience
        self.best = math.inf
        self.num_bad = 0

    @staticmethod
    def from_config(cfg):
        return PlateauSchedule(cfg.learning_rate, cfg.lr_decay_factor, cfg.lr_min,
                               cfg.plateau_patience)

    def step(self, loss):
        if loss < self.best:
            self.best = loss
            self.num_bad = 0
            return self.lr
        self.num_bad += 1
        if self.num_bad >= self.patience:
            new_lr = max(self.lr * self.factor, self.lr_min)
            if new_lr != self.lr:
                logger.info('Reducing learning rate %g -> %g', self.lr, new_lr)
            self.lr = new_lr
            self.num_bad = 0
        return self.lr


def lr_schedule(state, validation_loss):
    if validation_loss < 0:
        raise ValueError('validation loss must be non-negative, but received: %r' %
                         (validation_loss, ))
    return state.step(validation_loss)


HistoryRow = collections.namedtuple('HistoryRow', HISTORY_COLUMNS)

TrainResult = collections.namedtuple('TrainResult', ['checkpoint', 'history', 'model'])


def history_frame(history):
    return pd.DataFrame([row._asdict() for row in history], columns=list(HISTORY_COLUMNS))


def write_history_csv(history, path):
    history_frame(history).to_csv(path, index=False, float_format='%.10g', na_rep='nan')


def evaluate_loss(model, prepared, cfg):
    """Loss breakdown over `prepared` without recording a tape."""
    return loss_total(model, prepared, cfg)


def _validation_metrics(labels, predictions):
    rmse = metrics.rmse(labels, predictions)
    try:
        r = metrics.pearson(labels, predictions)
    except metrics.UndefinedMetricError:
        r = float('nan')
    return rmse, r


def effective_model_config(model_config, train_config):
    cfg = copy.deepcopy(model_config)
    if train_config.disable_geometry and not cfg.disable_geometry:
        cfg.disable_geometry = True
    return cfg


def train(dataset, train_config, model_config, physics_config):
    """Trains a fresh model on the `train` split of `dataset`.

    After every epoch the loss is re-evaluated at the updated parameters, on the
    validation split when there is one and on the training split otherwise.  The
    retained checkpoint holds the parameters and optimizer state of the epoch with
    the lowest such loss.
    """
    train_config = copy.deepcopy(train_config).validate()
    train_complexes = dataset.split('train')
    if not train_complexes:
        raise EmptyDatasetError('dataset has no training complexes')
    validation_complexes = dataset.split('validation')

    model = SpinModel(effective_model_config(model_config, train_config), physics_config)
    train_set = [model.prepare(c) for c in train_complexes]
    validation_set = [model.prepare(c) for c in validation_complexes]

    rng = np.random.default_rng(train_config.seed)
    schedule = PlateauSchedule.from_config(train_config)
    optimizer = AdamState()
    params = model.parameters()
    history = []
    best_loss = math.inf
    best_values = model.parameter_values()
    best_optimizer = optimizer.copy()
    best_epoch = 0

    for epoch in range(1, train_config.max_epochs + 1):
        lr = schedule.lr
        order = rng.permutation(len(train_set))
        sums = np.zeros(3)
        for start in range(0, len(order), train_config.batch_size):
            batch = [train_set[i] for i in order[start:start + train_config.batch_size]]
            tape = ad.Tape()
            losses = loss_total(model, batch, train_config, tape=tape)
            total = losses.total.item()
            if not math.isfinite(total):
                raise NonFiniteLossError('non-finite loss in epoch %d' % (epoch, ),
                                         complex_id=batch[0].complex_id)
            grads, _ = clip_gradients(tape.backward(losses.total), train_config.grad_clip_norm)
            adam_step(params, grads, optimizer, lr)
            sums += (total, losses.data.item(), losses.physics.item())

        val_rmse = val_pearson = float('nan')
        if validation_set:
            val_losses = evaluate_loss(model, validation_set, train_config)
            monitored = val_losses.total.item()
            val_rmse, val_pearson = _validation_metrics([p.label for p in validation_set],
                                                        val_losses.predictions)
        else:
            monitored = evaluate_loss(model, train_set, train_config).total.item()
        history.append(
            HistoryRow(epoch=epoch,
                       lr=lr,
                       loss_total=float(sums[0]),
                       loss_data=float(sums[1]),
                       loss_physics=float(sums[2]),
                       val_rmse=val_rmse,
                       val_pearson=val_pearson))
        logger.info('epoch %d lr=%g loss=%.6g data=%.6g physics=%.6g val_rmse=%.6g', epoch, lr,
                    sums[0], sums[1], sums[2], val_rmse)
        if monitored < best_loss:
            best_loss = monitored
            best_values = model.parameter_values()
            best_optimizer = optimizer.copy()
            best_epoch = epoch
        lr_schedule(schedule, monitored)

    model.load_parameter_values(best_values)
    meta = collections.OrderedDict([
        ('epoch', best_epoch),
        ('epochs_run', train_config.max_epochs),
        ('seed', train_config.seed),
        ('best_loss', best_loss if math.isfinite(best_loss) else None),
        ('train_config', train_config.to_json()),
    ])
    checkpoint = ModelCheckpoint.from_model(model, meta=meta, optimizer_state=best_optimizer)
    return TrainResult(checkpoint=checkpoint, history=history, model=model)
