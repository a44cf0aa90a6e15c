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
"""JSON model checkpoints.

Floats are written with Python's shortest round-trip representation, so a
loaded checkpoint reproduces parameters, and hence predictions, bit for bit.
"""

import collections
import os
import tempfile

import numpy as np

from .json_utils import decode_json, encode_json, is_json_number
from .json_wrappers import ConfigError

SCHEMA_VERSION = 1

_TOP_LEVEL_KEYS = ('schema_version', 'model_config', 'physics_config', 'params', 'meta')


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


def _encode_array(value):
    value = np.asarray(value, dtype=np.float64)
    return collections.OrderedDict([('shape', list(value.shape)),
                                    ('data', [float(x) for x in value.reshape(-1)])])


def _decode_array(name, obj):
    if not isinstance(obj, dict) or set(obj) != {'shape', 'data'}:
        raise CheckpointCorruptError('parameter %r: expected an object with shape and data' %
                                     (name, ))
    shape = obj['shape']
    data = obj['data']
    if (not isinstance(shape, list) or
            not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in shape)):
        raise CheckpointCorruptError('parameter %r: invalid shape %r' % (name, shape))
    if not isinstance(data, list) or not all(is_json_number(x) for x in data):
        raise CheckpointCorruptError('parameter %r: data must be an array of numbers' % (name, ))
    if len(data) != int(np.prod(shape, dtype=np.int64)):
        raise CheckpointCorruptError('parameter %r: %d values for shape %r' %
                                     (name, len(data), shape))
    return np.array(data, dtype=np.float64).reshape(shape)


class ModelCheckpoint(object):
    __slots__ = ('schema_version', 'model_config', 'physics_config', 'params', 'meta',
                 'optimizer_state')

    def __init__(self, model_config, physics_config, params, meta=None, optimizer_state=None,
                 schema_version=SCHEMA_VERSION):
        self.schema_version = schema_version
        self.model_config = model_config
        self.physics_config = physics_config
        self.params = collections.OrderedDict(
            (name, np.array(value, dtype=np.float64)) for name, value in params.items())
        self.meta = collections.OrderedDict() if meta is None else meta
        self.optimizer_state = optimizer_state

    @staticmethod
    def from_model(model, meta=None, optimizer_state=None):
        return ModelCheckpoint(model.model_config,
                               model.physics_config,
                               model.parameter_values(),
                               meta=meta,
                               optimizer_state=optimizer_state)

    def to_model(self):
        from .model import SpinModel
        model = SpinModel(self.model_config, self.physics_config)
        try:
            model.load_parameter_values(self.params)
        except ValueError as e:
            raise CheckpointCorruptError(str(e))
        return model

    def to_json(self):
        d = collections.OrderedDict()
        d['schema_version'] = self.schema_version
        d['model_config'] = self.model_config.to_json()
        d['physics_config'] = self.physics_config.to_json()
        d['params'] = collections.OrderedDict(
            (name, _encode_array(value)) for name, value in self.params.items())
        d['meta'] = self.meta
        if self.optimizer_state is not None:
            d['optimizer_state'] = self.optimizer_state.to_json()
        return d

    @staticmethod
    def from_json(obj):
        from .physics import PhysicsConfig
        from .training import AdamState
        from .transformer import ModelConfig
        if not isinstance(obj, dict):
            raise CheckpointCorruptError('checkpoint must be a JSON object')
        version = obj.get('schema_version')
        if version != SCHEMA_VERSION:
            raise CheckpointVersionError('unsupported checkpoint schema_version %r (expected %d)' %
                                         (version, SCHEMA_VERSION))
        missing = [k for k in _TOP_LEVEL_KEYS if k not in obj]
        if missing:
            raise CheckpointCorruptError('checkpoint is missing %s' % (', '.join(missing), ))
        try:
            model_config = ModelConfig(obj['model_config']).validate()
            physics_config = PhysicsConfig(obj['physics_config']).validate()
        except ConfigError as e:
            raise CheckpointCorruptError('invalid configuration: %s' % (e, ))
        if not isinstance(obj['params'], dict):
            raise CheckpointCorruptError('params must be a JSON object')
        params = collections.OrderedDict(
            (name, _decode_array(name, value)) for name, value in obj['params'].items())
        optimizer_state = None
        if obj.get('optimizer_state') is not None:
            try:
                optimizer_state = AdamState.from_json(obj['optimizer_state'])
            except (KeyError, TypeError, ValueError, AttributeError) as e:
                raise CheckpointCorruptError('invalid optimizer_state: %s' % (e, ))
        ckpt = ModelCheckpoint(model_config,
                               physics_config,
                               params,
                               meta=obj['meta'],
                               optimizer_state=optimizer_state)
        # Validates names and shapes against the configured architecture.
        ckpt.to_model()
        return ckpt


def dump_checkpoint(ckpt):
    return encode_json(ckpt.to_json()) + '\n'


def parse_checkpoint(text):
    try:
        obj = decode_json(text)
    except ValueError as e:
        raise CheckpointCorruptError('malformed checkpoint: %s' % (e, ))
    return ModelCheckpoint.from_json(obj)


def save_checkpoint(ckpt, path):
    """Writes atomically: readers never observe a partially written file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.ckpt-', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8') as f:
            f.write(dump_checkpoint(ckpt))
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def load_checkpoint(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except UnicodeDecodeError as e:
        raise CheckpointCorruptError('%s: %s' % (path, e))
    return parse_checkpoint(text)
