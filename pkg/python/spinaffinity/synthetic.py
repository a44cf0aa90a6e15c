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
"""Datasets, on-disk dataset directories and the synthetic complex generator.

Synthetic labels come from a fixed reference oracle with zero offsets:

  y* = SIGMA_STAR * sum_ij pair_energy(u_ij, 0, d_ij, 1)

so a model that learns bounded offsets near zero and sigma near SIGMA_STAR
fits them exactly.
"""

import collections
import glob
import logging
import os

import numpy as np
import six
from scipy.spatial.distance import cdist

from . import physics
from .complex_model import (Complex, ComplexFormatError, LigandAtom, ProteinAtom, dump_complex,
                            load_complex)
from .featurize import AMINO_ACIDS
from .json_utils import decode_json, encode_json
from .vdw_radii import default_radii_table

logger = logging.getLogger(__name__)

SPLITS = ('train', 'validation', 'test')

SPLITS_MANIFEST = 'splits.json'
CLUSTERS_MANIFEST = 'clusters.json'

SIGMA_STAR = -0.2

PROTEIN_ELEMENT_CHOICES = ('C', 'C', 'C', 'N', 'O', 'S')
LIGAND_ELEMENT_CHOICES = ('C', 'C', 'C', 'N', 'O', 'S', 'P', 'F', 'Cl')

MIN_PROTEIN_SEPARATION = 3.5
MIN_LIGAND_SEPARATION = 1.2
MAX_CONTACT_SCALE = 1.1
MAX_PLACEMENT_ATTEMPTS = 1000


class SyntheticGenerationError(RuntimeError):
    pass


class DatasetError(ValueError):
    def __init__(self, message, path=None):
        super(DatasetError, self).__init__(message)
        self.path = path


class Dataset(object):
    """Complexes with split tags; complex ids are unique."""

    __slots__ = ('complexes', 'splits')

    def __init__(self, complexes=(), splits=None):
        complexes = list(complexes)
        ids = [c.id for c in complexes]
        if len(set(ids)) != len(ids):
            raise DatasetError('duplicate complex ids in dataset')
        if splits is None:
            splits = {}
        unknown = [k for k in splits if k not in ids]
        if unknown:
            raise DatasetError('split tags refer to unknown complexes: %s' %
                               (', '.join(sorted(unknown)), ))
        resolved = collections.OrderedDict()
        for c in complexes:
            split = splits.get(c.id, 'train')
            if split not in SPLITS:
                raise DatasetError('complex %r has unknown split %r' % (c.id, split))
            if c.affinity is None:
                raise DatasetError('complex %r in split %r has no affinity label' % (c.id, split))
            resolved[c.id] = split
        self.complexes = complexes
        self.splits = resolved

    def __len__(self):
        return len(self.complexes)

    def __iter__(self):
        return iter(self.complexes)

    @property
    def ids(self):
        return [c.id for c in self.complexes]

    def split(self, name):
        if name not in SPLITS:
            raise ValueError('unknown split %r' % (name, ))
        return [c for c in self.complexes if self.splits[c.id] == name]

    def get(self, complex_id):
        for c in self.complexes:
            if c.id == complex_id:
                return c
        raise KeyError(complex_id)

    def with_splits(self, splits):
        merged = dict(self.splits)
        merged.update(splits)
        return Dataset(self.complexes, merged)

    def concatenate(self, other):
        splits = dict(self.splits)
        splits.update(other.splits)
        return Dataset(self.complexes + other.complexes, splits)


ClusterSpec = collections.namedtuple('ClusterSpec', ['target_id', 'complex_ids'])


def _random_protein(rng, num_atoms, residue_names):
    box = max(6.0, (num_atoms * 60.0)**(1.0 / 3))
    positions = []
    attempts = 0
    while len(positions) < num_atoms:
        attempts += 1
        if attempts > MAX_PLACEMENT_ATTEMPTS * num_atoms:
            raise SyntheticGenerationError('could not place %d protein atoms' % (num_atoms, ))
        p = rng.uniform(0, box, size=3)
        if positions and cdist([p], positions).min() < MIN_PROTEIN_SEPARATION:
            continue
        positions.append(p)
    atoms = []
    for i, p in enumerate(positions):
        residue = i // 4
        atoms.append(
            ProteinAtom(element=PROTEIN_ELEMENT_CHOICES[rng.integers(len(PROTEIN_ELEMENT_CHOICES))],
                        residue_name=residue_names[residue % len(residue_names)],
                        residue_index=residue + 1,
                        chain_id='A',
                        is_backbone=bool(i % 4 < 2),
                        position=tuple(float(x) for x in p)))
    return atoms


def _random_direction(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _random_ligand(rng, protein, num_atoms, at_minimum, table):
    protein_positions = np.array([a.position for a in protein])
    protein_radii = np.array([table.radius(a.element) for a in protein])
    atoms = []
    for _ in range(num_atoms):
        element = LIGAND_ELEMENT_CHOICES[rng.integers(len(LIGAND_ELEMENT_CHOICES))]
        radius = table.radius(element)
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            anchor = int(rng.integers(len(protein)))
            u = radius + protein_radii[anchor]
            scale = 1.0 if at_minimum else rng.uniform(1.0, MAX_CONTACT_SCALE)
            p = protein_positions[anchor] + scale * u * _random_direction(rng)
            d = np.linalg.norm(protein_positions - p, axis=1)
            others = np.arange(len(protein)) != anchor
            if np.any(d[others] < (radius + protein_radii)[others]):
                continue
            if atoms and cdist([p], [a.position for a in atoms]).min() < MIN_LIGAND_SEPARATION:
                continue
            break
        else:
            raise SyntheticGenerationError('could not place a ligand atom after %d attempts' %
                                           (MAX_PLACEMENT_ATTEMPTS, ))
        atoms.append(
            LigandAtom(element=element,
                       hybridization=('sp', 'sp2', 'sp3')[rng.integers(3)],
                       formal_charge=int(rng.integers(-1, 2)),
                       degree=int(rng.integers(1, 5)),
                       is_aromatic=bool(rng.integers(2)),
                       position=tuple(float(x) for x in p)))
    return atoms


def oracle_energy(protein, ligand, table=None):
    if table is None:
        table = default_radii_table()
    u = table.pair_sums([a.element for a in ligand], [a.element for a in protein])
    d = cdist([a.position for a in ligand], [a.position for a in protein])
    return float(np.sum(physics.pair_energy(u, 0.0, d, 1.0)))


def oracle_label(protein, ligand, table=None):
    return SIGMA_STAR * oracle_energy(protein, ligand, table)


def _size(rng, size_range):
    low, high = size_range
    if low < 1 or high < low:
        raise ValueError('invalid size range %r' % (size_range, ))
    return int(rng.integers(low, high + 1))


def gen_synthetic(seed,
                  n_complexes,
                  protein_size_range=(6, 16),
                  ligand_size_range=(3, 8),
                  minima_fraction=0.25,
                  id_prefix='syn',
                  table=None):
    """Generates `n_complexes` oracle-labeled complexes, all tagged `train`.

    Each ligand atom touches one protein atom at a distance in [u, 1.1 u] and
    keeps at least its radius sum from every other protein atom.  In the first
    round(minima_fraction * n_complexes) complexes every touching pair sits
    exactly at u.
    """
    if table is None:
        table = default_radii_table()
    rng = np.random.default_rng(seed)
    num_minima = int(round(minima_fraction * n_complexes))
    complexes = []
    for i in range(n_complexes):
        protein = _random_protein(rng, _size(rng, protein_size_range), AMINO_ACIDS[:-1])
        ligand = _random_ligand(rng, protein, _size(rng, ligand_size_range), i < num_minima,
                                table)
        complexes.append(
            Complex('%s%04d' % (id_prefix, i), protein, ligand, oracle_label(protein, ligand,
                                                                            table)))
    return Dataset(complexes)


def gen_synthetic_clusters(seed,
                           n_clusters,
                           cluster_size,
                           protein_size_range=(8, 16),
                           ligand_size_range=(2, 10),
                           id_prefix='target',
                           table=None):
    """Generates clusters of complexes that share one protein.

    Returns (Dataset, [ClusterSpec]).
    """
    if cluster_size < 2:
        raise ValueError('cluster_size must be >= 2, but received: %r' % (cluster_size, ))
    if table is None:
        table = default_radii_table()
    rng = np.random.default_rng(seed)
    complexes = []
    clusters = []
    for t in range(n_clusters):
        target_id = '%s%03d' % (id_prefix, t)
        protein = _random_protein(rng, _size(rng, protein_size_range), AMINO_ACIDS[:-1])
        ids = []
        for m in range(cluster_size):
            ligand = _random_ligand(rng, protein, _size(rng, ligand_size_range), False, table)
            complex_id = '%s_%02d' % (target_id, m)
            complexes.append(Complex(complex_id, protein, ligand,
                                     oracle_label(protein, ligand, table)))
            ids.append(complex_id)
        clusters.append(ClusterSpec(target_id, ids))
    return Dataset(complexes), clusters


def save_dataset(dataset, directory):
    """Writes `<id>.json` per complex plus the split manifest."""
    if not os.path.isdir(directory):
        os.makedirs(directory)
    for c in dataset:
        with open(os.path.join(directory, c.id + '.json'), 'w', encoding='utf-8') as f:
            f.write(dump_complex(c))
    with open(os.path.join(directory, SPLITS_MANIFEST), 'w', encoding='utf-8') as f:
        f.write(encode_json(dataset.splits, indent=1) + '\n')


def _read_json(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return decode_json(f.read())
    except (IOError, ValueError) as e:
        raise DatasetError('%s: %s' % (path, e), path=path)


def load_dataset(directory):
    """Loads every interchange file of a dataset directory, sorted by file name."""
    if not os.path.isdir(directory):
        raise DatasetError('%s: not a directory' % (directory, ), path=directory)
    manifests = (SPLITS_MANIFEST, CLUSTERS_MANIFEST)
    complexes = []
    for path in sorted(glob.glob(os.path.join(directory, '*.json'))):
        if os.path.basename(path) in manifests:
            continue
        try:
            complexes.append(load_complex(path))
        except (ComplexFormatError, IOError) as e:
            raise DatasetError('%s: %s' % (path, e), path=path)
    splits_path = os.path.join(directory, SPLITS_MANIFEST)
    splits = {}
    if os.path.exists(splits_path):
        splits = _read_json(splits_path)
        if not isinstance(splits, dict) or not all(
                isinstance(v, six.string_types) for v in splits.values()):
            raise DatasetError('%s: expected an object mapping complex id to split' %
                               (splits_path, ),
                               path=splits_path)
    logger.info('Loaded %d complexes from %s', len(complexes), directory)
    try:
        return Dataset(complexes, splits)
    except DatasetError as e:
        raise DatasetError('%s: %s' % (directory, e), path=directory)


def save_clusters(clusters, path):
    obj = [
        collections.OrderedDict([('target_id', c.target_id), ('complex_ids', list(c.complex_ids))])
        for c in clusters
    ]
    with open(path, 'w', encoding='utf-8') as f:
        f.write(encode_json(obj, indent=1) + '\n')


def load_clusters(path):
    obj = _read_json(path)
    if not isinstance(obj, list):
        raise DatasetError('%s: expected an array of clusters' % (path, ), path=path)
    clusters = []
    for entry in obj:
        if (not isinstance(entry, dict) or set(entry) != {'target_id', 'complex_ids'} or
                not isinstance(entry['complex_ids'], list)):
            raise DatasetError('%s: each cluster needs target_id and complex_ids' % (path, ),
                               path=path)
        clusters.append(ClusterSpec(entry['target_id'], list(entry['complex_ids'])))
    return clusters
