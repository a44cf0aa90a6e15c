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
"""Tests for checkpoint.py"""

import json

import numpy as np
import pytest

from spinaffinity import checkpoint, synthetic
from spinaffinity.model import SpinModel
from spinaffinity.physics import PhysicsConfig


def _model(small_model_config):
    return SpinModel(small_model_config, PhysicsConfig({'beta': 0.25}))


def test_round_trip_is_bit_exact(small_model_config, tmp_path):
    model = _model(small_model_config)
    path = str(tmp_path / 'model.ckpt')
    checkpoint.save_checkpoint(checkpoint.ModelCheckpoint.from_model(model, meta={'epoch': 3}),
                               path)
    loaded = checkpoint.load_checkpoint(path)
    assert loaded.meta == {'epoch': 3}
    restored = loaded.to_model()
    for name, value in model.parameter_values().items():
        np.testing.assert_array_equal(restored.parameter_values()[name], value)
    assert restored.physics_config.beta == 0.25
    for c in synthetic.gen_synthetic(0, 3, protein_size_range=(4, 6), ligand_size_range=(2, 3)):
        assert restored.predict(c) == model.predict(c)


def test_truncated_file_is_corrupt(small_model_config, tmp_path):
    text = checkpoint.dump_checkpoint(checkpoint.ModelCheckpoint.from_model(
        _model(small_model_config)))
    path = tmp_path / 'truncated.ckpt'
    path.write_text(text[:len(text) // 2])
    with pytest.raises(checkpoint.CheckpointCorruptError):
        checkpoint.load_checkpoint(str(path))


def test_unknown_schema_version(small_model_config):
    obj = checkpoint.ModelCheckpoint.from_model(_model(small_model_config)).to_json()
    obj['schema_version'] = 99
    with pytest.raises(checkpoint.CheckpointVersionError):
        checkpoint.parse_checkpoint(json.dumps(obj))


def test_wrong_parameter_shape(small_model_config):
    obj = checkpoint.ModelCheckpoint.from_model(_model(small_model_config)).to_json()
    obj['params']['sigma'] = {'shape': [2], 'data': [1.0, 2.0]}
    with pytest.raises(checkpoint.CheckpointCorruptError):
        checkpoint.parse_checkpoint(json.dumps(obj))


def test_missing_parameter(small_model_config):
    obj = checkpoint.ModelCheckpoint.from_model(_model(small_model_config)).to_json()
    del obj['params']['embed.ligand.bias']
    with pytest.raises(checkpoint.CheckpointCorruptError):
        checkpoint.parse_checkpoint(json.dumps(obj))


def test_data_length_mismatch(small_model_config):
    obj = checkpoint.ModelCheckpoint.from_model(_model(small_model_config)).to_json()
    obj['params']['sigma']['data'] = [1.0, 2.0]
    with pytest.raises(checkpoint.CheckpointCorruptError):
        checkpoint.parse_checkpoint(json.dumps(obj))


def test_invalid_model_config(small_model_config):
    obj = checkpoint.ModelCheckpoint.from_model(_model(small_model_config)).to_json()
    obj['model_config']['num_heads'] = 3
    with pytest.raises(checkpoint.CheckpointCorruptError):
        checkpoint.parse_checkpoint(json.dumps(obj))


def test_optimizer_state_round_trip(small_model_config):
    from spinaffinity.training import AdamState
    state = AdamState(step=4, m={'sigma': np.array(0.5)}, v={'sigma': np.array(0.25)})
    ckpt = checkpoint.ModelCheckpoint.from_model(_model(small_model_config),
                                                 optimizer_state=state)
    loaded = checkpoint.parse_checkpoint(checkpoint.dump_checkpoint(ckpt))
    assert loaded.optimizer_state.step == 4
    assert float(loaded.optimizer_state.m['sigma']) == 0.5
