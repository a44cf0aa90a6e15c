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
import os

import pytest

from spinaffinity import complex_model
from spinaffinity import transformer

TESTDATA_DIR = os.path.join(os.path.dirname(__file__), 'testdata')


def pytest_addoption(parser):
    parser.addoption('--skip-slow-tests',
                     action='store_true',
                     default=False,
                     help='Skip training-scale tests.')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: training-scale test, skipped by --skip-slow-tests')


def pytest_collection_modifyitems(config, items):
    if not config.getoption('--skip-slow-tests'):
        return
    skip = pytest.mark.skip(reason='--skip-slow-tests')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


def make_protein_atom(position, element='C', residue_name='ALA', residue_index=1, chain_id='A',
                      is_backbone=False):
    return complex_model.ProteinAtom(element=element,
                                     residue_name=residue_name,
                                     residue_index=residue_index,
                                     chain_id=chain_id,
                                     is_backbone=is_backbone,
                                     position=tuple(float(x) for x in position))


def make_ligand_atom(position, element='O', hybridization='sp3', formal_charge=0, degree=1,
                     is_aromatic=False):
    return complex_model.LigandAtom(element=element,
                                    hybridization=hybridization,
                                    formal_charge=formal_charge,
                                    degree=degree,
                                    is_aromatic=is_aromatic,
                                    position=tuple(float(x) for x in position))


@pytest.fixture
def toy_complex():
    """Two protein atoms from different residues and two ligand atoms."""
    return complex_model.Complex(
        'toy',
        protein=[
            make_protein_atom((0, 0, 0), 'C', 'ALA', 1, is_backbone=True),
            make_protein_atom((3.5, 0, 0), 'N', 'GLY', 2),
        ],
        ligand=[
            make_ligand_atom((0, 3.6, 0), 'O'),
            make_ligand_atom((3.5, 3.9, 0.5), 'C', 'sp2', degree=3, is_aromatic=True),
        ],
        affinity=5.0)


@pytest.fixture
def small_model_config():
    return transformer.ModelConfig({
        'hidden_dim': 8,
        'num_layers': 2,
        'num_heads': 2,
        'k': 3,
    })
