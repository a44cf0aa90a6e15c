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
"""Tests for featurize.py"""

import numpy as np

from conftest import make_ligand_atom, make_protein_atom
from spinaffinity import featurize


def _slot(vocabulary, value):
    return vocabulary.index(value)


def test_dimensions():
    assert featurize.PROTEIN_FEATURE_DIM == 27
    assert featurize.LIGAND_FEATURE_DIM == 26


def test_backbone_alanine_carbon():
    v = featurize.featurize_protein_atom(make_protein_atom((0, 0, 0), 'C', 'ALA', is_backbone=True))
    num_elements = len(featurize.PROTEIN_ELEMENTS)
    expected = np.zeros(27)
    expected[_slot(featurize.PROTEIN_ELEMENTS, 'C')] = 1
    expected[num_elements + _slot(featurize.AMINO_ACIDS, 'ALA')] = 1
    expected[-1] = 1
    np.testing.assert_array_equal(v, expected)


def test_selenium_unknown_residue_uses_fallbacks():
    v = featurize.featurize_protein_atom(make_protein_atom((0, 0, 0), 'Se', 'XYZ'))
    num_elements = len(featurize.PROTEIN_ELEMENTS)
    assert np.count_nonzero(v) == 2
    assert v[_slot(featurize.PROTEIN_ELEMENTS, 'other')] == 1
    assert v[num_elements + _slot(featurize.AMINO_ACIDS, 'unknown')] == 1
    assert v[-1] == 0


def _ligand_offsets():
    element = 0
    hybridization = element + len(featurize.LIGAND_ELEMENTS)
    charge = hybridization + 4
    degree = charge + len(featurize.FORMAL_CHARGES)
    aromatic = degree + featurize.MAX_DEGREE_BUCKET + 1
    return element, hybridization, charge, degree, aromatic


def test_aromatic_sp2_carbon():
    atom = make_ligand_atom((0, 0, 0), 'C', 'sp2', formal_charge=0, degree=3, is_aromatic=True)
    v = featurize.featurize_ligand_atom(atom)
    element, hybridization, charge, degree, aromatic = _ligand_offsets()
    expected = np.zeros(26)
    expected[element + _slot(featurize.LIGAND_ELEMENTS, 'C')] = 1
    expected[hybridization + 1] = 1
    expected[charge + 2] = 1
    expected[degree + 3] = 1
    expected[aromatic] = 1
    np.testing.assert_array_equal(v, expected)


def test_formal_charge_clamped():
    v = featurize.featurize_ligand_atom(make_ligand_atom((0, 0, 0), formal_charge=4))
    _, _, charge, degree, _ = _ligand_offsets()
    np.testing.assert_array_equal(v[charge:degree], [0, 0, 0, 0, 1])


def test_degree_clamped():
    v = featurize.featurize_ligand_atom(make_ligand_atom((0, 0, 0), degree=7))
    _, _, _, degree, aromatic = _ligand_offsets()
    np.testing.assert_array_equal(v[degree:aromatic], [0, 0, 0, 0, 0, 1])


def test_featurize_matrices(toy_complex):
    assert featurize.featurize_protein(toy_complex.protein).shape == (2, 27)
    ligand = featurize.featurize_ligand(toy_complex.ligand)
    assert ligand.shape == (2, 26)
    assert set(np.unique(ligand)) <= {0.0, 1.0}
