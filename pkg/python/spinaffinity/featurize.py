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
"""One-hot atom featurization.

Protein atoms (27 features): element {C, N, O, S, other}, amino acid (20 standard +
unknown), backbone flag.

Ligand atoms (26 features): element {C, N, O, S, P, F, Cl, Br, I, other},
hybridization {sp, sp2, sp3, other}, formal charge clamped to [-2, 2],
min(degree, 5), aromatic flag.
"""

import numpy as np

from .complex_model import HYBRIDIZATIONS

PROTEIN_ELEMENTS = ('C', 'N', 'O', 'S', 'other')

AMINO_ACIDS = ('ALA', 'ARG', 'ASN', 'ASP', 'CYS', 'GLN', 'GLU', 'GLY', 'HIS', 'ILE', 'LEU', 'LYS',
               'MET', 'PHE', 'PRO', 'SER', 'THR', 'TRP', 'TYR', 'VAL', 'unknown')

LIGAND_ELEMENTS = ('C', 'N', 'O', 'S', 'P', 'F', 'Cl', 'Br', 'I', 'other')

FORMAL_CHARGES = (-2, -1, 0, 1, 2)

MAX_DEGREE_BUCKET = 5

PROTEIN_FEATURE_DIM = len(PROTEIN_ELEMENTS) + len(AMINO_ACIDS) + 1
LIGAND_FEATURE_DIM = (len(LIGAND_ELEMENTS) + len(HYBRIDIZATIONS) + len(FORMAL_CHARGES) +
                      MAX_DEGREE_BUCKET + 1 + 1)

assert PROTEIN_FEATURE_DIM == 27
assert LIGAND_FEATURE_DIM == 26


def _one_hot(vocabulary, value, fallback):
    v = np.zeros(len(vocabulary), dtype=np.float64)
    try:
        v[vocabulary.index(value)] = 1
    except ValueError:
        v[vocabulary.index(fallback)] = 1
    return v


def featurize_protein_atom(atom):
    return np.concatenate([
        _one_hot(PROTEIN_ELEMENTS, atom.element, 'other'),
        _one_hot(AMINO_ACIDS, atom.residue_name, 'unknown'),
        [1.0 if atom.is_backbone else 0.0],
    ])


def featurize_ligand_atom(atom):
    charge = min(max(int(atom.formal_charge), FORMAL_CHARGES[0]), FORMAL_CHARGES[-1])
    degree = min(max(int(atom.degree), 0), MAX_DEGREE_BUCKET)
    degree_one_hot = np.zeros(MAX_DEGREE_BUCKET + 1, dtype=np.float64)
    degree_one_hot[degree] = 1
    return np.concatenate([
        _one_hot(LIGAND_ELEMENTS, atom.element, 'other'),
        _one_hot(HYBRIDIZATIONS, atom.hybridization, 'other'),
        _one_hot(FORMAL_CHARGES, charge, 0),
        degree_one_hot,
        [1.0 if atom.is_aromatic else 0.0],
    ])


def featurize_protein(atoms):
    return np.array([featurize_protein_atom(a) for a in atoms],
                    dtype=np.float64).reshape(-1, PROTEIN_FEATURE_DIM)


def featurize_ligand(atoms):
    return np.array([featurize_ligand_atom(a) for a in atoms],
                    dtype=np.float64).reshape(-1, LIGAND_FEATURE_DIM)
