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
"""Tests for the spin-affinity command-line tool."""

import io
import json
import os

import pandas as pd
import pytest

from spinaffinity.tool import spin

SMALL_MODEL_FLAGS = [
    '--set', 'model.hidden_dim=8', '--set', 'model.num_heads=2', '--set', 'model.num_layers=1',
    '--set', 'model.k=4'
]


def _synth(directory, *extra):
    argv = ['synth', '--seed', '0', '--out', directory, '--protein-size', '4', '6',
            '--ligand-size', '2', '3'] + list(extra)
    assert spin.main(argv) == 0


@pytest.fixture
def trained(tmp_path):
    data = str(tmp_path / 'data')
    _synth(data, '--n', '5', '--test-fraction', '0.2')
    ckpt = str(tmp_path / 'model.ckpt')
    argv = ['train', '--data', data, '--out', ckpt, '--set', 'train.max_epochs=2'
            ] + SMALL_MODEL_FLAGS
    assert spin.main(argv) == 0
    return data, ckpt


def test_print_config(capsys):
    assert spin.main(['train', '--print-config', '--seed', '4', '--set', 'model.k=3']) == 0
    out, err = capsys.readouterr()
    resolved = json.loads(out)
    assert resolved['train']['seed'] == 4
    assert resolved['model']['k'] == 3
    assert 'model.k\tflag' in err.splitlines()
    assert 'model.hidden_dim\tdefault' in err.splitlines()


def test_config_error_exit_code(tmp_path, capsys):
    assert spin.main(['train', '--config', str(tmp_path / 'missing.json'), '--print-config']) == 1
    assert spin.main(['train', '--print-config', '--set', 'model.num_heads=3']) == 1
    assert spin.main(['train', '--print-config', '--set', 'model.k=1e400']) == 1
    assert 'error:' in capsys.readouterr().err


def test_synth_writes_splits(tmp_path):
    data = str(tmp_path / 'data')
    _synth(data, '--n', '4', '--validation-fraction', '0.25', '--test-fraction', '0.25')
    with open(os.path.join(data, 'splits.json')) as f:
        splits = json.load(f)
    assert splits == {
        'syn0000': 'train',
        'syn0001': 'train',
        'syn0002': 'validation',
        'syn0003': 'test'
    }


def test_train_writes_checkpoint_and_history(trained):
    _, ckpt = trained
    assert os.path.exists(ckpt)
    history = pd.read_csv(ckpt + '.history.csv')
    assert list(history.columns) == [
        'epoch', 'lr', 'loss_total', 'loss_data', 'loss_physics', 'val_rmse', 'val_pearson'
    ]
    assert list(history['epoch']) == [1, 2]


def test_train_missing_data(tmp_path):
    argv = ['train', '--data', str(tmp_path / 'none'), '--out', str(tmp_path / 'm.ckpt')]
    assert spin.main(argv) == 2


def test_predict(trained, tmp_path, capsys):
    data, ckpt = trained
    inputs = [os.path.join(data, 'syn0001.json'), os.path.join(data, 'syn0000.json')]
    assert spin.main(['predict', '--ckpt', ckpt, '--in'] + inputs + ['--jobs', '2']) == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert list(frame['complex_id']) == ['syn0001', 'syn0000']


def test_predict_no_inputs(trained, capsys):
    _, ckpt = trained
    assert spin.main(['predict', '--ckpt', ckpt]) == 0
    assert capsys.readouterr().out.strip() == 'complex_id,predicted_pk'


def test_predict_bad_input(trained, tmp_path, capsys):
    data, ckpt = trained
    bad = tmp_path / 'bad.json'
    bad.write_text('{')
    out = str(tmp_path / 'predictions.csv')
    argv = ['predict', '--ckpt', ckpt, '--in', str(bad), os.path.join(data, 'syn0000.json'),
            '--out', out]
    assert spin.main(argv) == 2
    assert list(pd.read_csv(out)['complex_id']) == ['syn0000']


def test_predict_undecodable_input(trained, tmp_path):
    data, ckpt = trained
    bad = tmp_path / 'binary.json'
    bad.write_bytes(b'\xff\xfe\x00{')
    out = str(tmp_path / 'predictions.csv')
    argv = ['predict', '--ckpt', ckpt, '--in', str(bad), os.path.join(data, 'syn0000.json'),
            '--out', out]
    assert spin.main(argv) == 2
    assert list(pd.read_csv(out)['complex_id']) == ['syn0000']


def test_predict_missing_checkpoint(tmp_path):
    assert spin.main(['predict', '--ckpt', str(tmp_path / 'missing.ckpt')]) == 2


def test_predict_corrupt_checkpoint(tmp_path):
    ckpt = tmp_path / 'corrupt.ckpt'
    ckpt.write_text('{"schema_version": 1, "params": ')
    assert spin.main(['predict', '--ckpt', str(ckpt)]) == 2


def test_evaluate(trained, tmp_path):
    data, ckpt = trained
    out = str(tmp_path / 'metrics.csv')
    assert spin.main(['evaluate', '--ckpt', ckpt, '--data', data, '--out', out]) == 0
    frame = pd.read_csv(out)
    assert list(frame['metric']) == ['rmse', 'mae', 'sd', 'pearson_r', 'n']
    assert frame['value'][4] == 5


def test_explain(trained, tmp_path):
    data, ckpt = trained
    out = tmp_path / 'explain.tsv'
    argv = ['explain', '--ckpt', ckpt, '--in', os.path.join(data, 'syn0000.json'), '--fraction',
            '0.5', '--out', str(out)]
    assert spin.main(argv) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == '#rank\tresidue_index\tchain\tresidue_name\tmin_pair_energy'
    assert lines[1].startswith('1\t')


def test_check_invariance(trained, tmp_path):
    data, ckpt = trained
    out = str(tmp_path / 'audit.csv')
    argv = ['check-invariance', '--ckpt', ckpt, '--data', data, '--transforms', '3', '--out', out]
    assert spin.main(argv) == 0
    assert len(pd.read_csv(out)) == 5


def test_rank(tmp_path, trained):
    _, ckpt = trained
    data = str(tmp_path / 'clusters')
    _synth(data, '--clusters', '2', '--cluster-size', '3')
    out = str(tmp_path / 'rank.csv')
    argv = ['rank', '--ckpt', ckpt, '--clusters', os.path.join(data, 'clusters.json'), '--out',
            out]
    assert spin.main(argv) == 0
    frame = pd.read_csv(out)
    assert list(frame['metric']) == [
        'ranking_power_spearman', 'ranking_power_kendall', 'num_clusters'
    ]
    assert frame['value'][2] == 2


@pytest.mark.slow
def test_grad_check_single_seed(capsys):
    assert spin.main(['grad-check', '--seed', '0']) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1] == 'failures\t0'


@pytest.mark.slow
def test_ablate(tmp_path):
    out = str(tmp_path / 'ablation.csv')
    argv = ['ablate', '--n-train', '4', '--n-test', '2', '--epochs', '1', '--out', out
            ] + SMALL_MODEL_FLAGS
    assert spin.main(argv) == 0
    assert list(pd.read_csv(out)['variant']) == [
        'full', 'without_geometry', 'without_physics', 'without_both'
    ]
