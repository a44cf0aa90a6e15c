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
"""Typed k-nearest-neighbor graphs over the atoms of a complex.

Nodes are numbered with the N protein atoms first, then the M ligand atoms.
Every node i receives directed edges j -> i from its k nearest neighbors.
"""

import collections
import enum

import numpy as np
from scipy.spatial.distance import cdist

from . import featurize

# Relative tolerance under which two neighbor distances count as tied.
TIE_TOLERANCE = 1e-9


class EdgeKind(enum.IntEnum):
    PP = 0
    LL = 1
    PL = 2  # protein source, ligand destination
    LP = 3  # ligand source, protein destination

    def one_hot(self):
        v = np.zeros(len(EdgeKind), dtype=np.float64)
        v[int(self)] = 1
        return v

    @staticmethod
    def from_partitions(src_is_ligand, dst_is_ligand):
        if src_is_ligand:
            return EdgeKind.LL if dst_is_ligand else EdgeKind.LP
        return EdgeKind.PL if dst_is_ligand else EdgeKind.PP


Edge = collections.namedtuple('Edge', ['src', 'dst', 'kind', 'distance'])


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class ComplexGraph(object):
    """Node features, positions and the typed edge list of one complex.

    Edges are stored as parallel arrays `src`, `dst`, `kind`, `distance`, ordered by
    destination node and then by increasing distance.
    """

    __slots__ = ('protein_features', 'ligand_features', 'positions', 'src', 'dst', 'kind',
                 'distance', 'complex_id', 'protein_atoms', 'ligand_atoms')

    def __init__(self, protein_features, ligand_features, positions, src, dst, kind, distance,
                 complex_id=None, protein_atoms=(), ligand_atoms=()):
        self.protein_atoms = tuple(protein_atoms)
        self.ligand_atoms = tuple(ligand_atoms)
        self.protein_features = _readonly(np.asarray(protein_features, dtype=np.float64))
        self.ligand_features = _readonly(np.asarray(ligand_features, dtype=np.float64))
        self.positions = _readonly(np.asarray(positions, dtype=np.float64))
        self.src = _readonly(np.asarray(src, dtype=np.int64))
        self.dst = _readonly(np.asarray(dst, dtype=np.int64))
        self.kind = _readonly(np.asarray(kind, dtype=np.int64))
        self.distance = _readonly(np.asarray(distance, dtype=np.float64))
        self.complex_id = complex_id

    @property
    def num_protein_atoms(self):
        return self.protein_features.shape[0]

    @property
    def num_ligand_atoms(self):
        return self.ligand_features.shape[0]

    @property
    def num_nodes(self):
        return self.positions.shape[0]

    @property
    def num_edges(self):
        return self.src.shape[0]

    @property
    def edges(self):
        return [
            Edge(int(s), int(d), EdgeKind(int(k)), float(r))
            for s, d, k, r in zip(self.src, self.dst, self.kind, self.distance)
        ]

    def in_degrees(self):
        return np.bincount(self.dst, minlength=self.num_nodes)

    def edge_kind_one_hot(self):
        return np.eye(len(EdgeKind), dtype=np.float64)[self.kind]

    def protein_positions(self):
        return self.positions[:self.num_protein_atoms]

    def ligand_positions(self):
        return self.positions[self.num_protein_atoms:]

    def ligand_protein_distances(self):
        """Returns the M x N matrix of ligand-protein pair distances."""
        return cdist(self.ligand_positions(), self.protein_positions())

    def ligand_protein_edge_mask(self):
        """M x N mask of pairs joined by a PL or LP edge in either direction."""
        n = self.num_protein_atoms
        mask = np.zeros((self.num_ligand_atoms, n), dtype=np.float64)
        for s, d, k in zip(self.src, self.dst, self.kind):
            if k == EdgeKind.PL:
                mask[d - n, s] = 1
            elif k == EdgeKind.LP:
                mask[s - n, d] = 1
        return mask


def _make_graph(c, src, dst, positions):
    n = c.num_protein_atoms
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    kind = [int(EdgeKind.from_partitions(s >= n, d >= n)) for s, d in zip(src, dst)]
    if len(src):
        distance = np.sqrt(np.sum((positions[src] - positions[dst])**2, axis=1))
    else:
        distance = np.zeros(0)
    return ComplexGraph(protein_features=featurize.featurize_protein(c.protein),
                        ligand_features=featurize.featurize_ligand(c.ligand),
                        positions=positions,
                        src=src,
                        dst=dst,
                        kind=kind,
                        distance=distance,
                        complex_id=c.id,
                        protein_atoms=c.protein,
                        ligand_atoms=c.ligand)


def tie_groups(row, tolerance=TIE_TOLERANCE):
    """Returns an integer rank per entry; entries within `tolerance` of their
    sorted predecessor (relative to max(1, value)) share a rank."""
    order = np.argsort(row, kind='stable')
    ranks = np.empty(len(row), dtype=np.int64)
    rank = 0
    previous = None
    for idx in order:
        value = row[idx]
        if previous is not None and not (value - previous <= tolerance * max(1.0, abs(value))):
            rank += 1
        ranks[idx] = rank
        previous = value
    return ranks


def build_knn_graph(c, k):
    """Builds the directed kNN graph.

    Distances equal within `TIE_TOLERANCE` are tied and go to the lower node
    index, which keeps the edge list unchanged under rigid motions.
    """
    if k < 1:
        raise ValueError('k must be >= 1, but received: %r' % (k, ))
    positions = c.positions()
    num_nodes = positions.shape[0]
    num_neighbors = min(k, num_nodes - 1)
    distances = cdist(positions, positions)
    indices = np.arange(num_nodes)
    src = []
    dst = []
    for i in range(num_nodes):
        row = distances[i].copy()
        row[i] = np.inf
        order = np.lexsort((indices, tie_groups(row)))[:num_neighbors]
        src.extend(order)
        dst.extend([i] * num_neighbors)
    return _make_graph(c, src, dst, positions)


def build_complete_graph(c):
    """All ordered pairs j -> i, j != i, in index order; independent of coordinates."""
    positions = c.positions()
    num_nodes = positions.shape[0]
    src = []
    dst = []
    for i in range(num_nodes):
        for j in range(num_nodes):
            if j != i:
                src.append(j)
                dst.append(i)
    return _make_graph(c, src, dst, positions)


def build_graph(c, k, disable_geometry=False):
    if disable_geometry:
        return build_complete_graph(c)
    return build_knn_graph(c, k)
