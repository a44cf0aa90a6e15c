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
"""Lennard-Jones interaction head.

For ligand atom i and protein atom j with radius sum u_ij, learned offset
H_ij = <h_M_i, h_P_j> bounded to beta * tanh(H_ij), and distance d_ij:

  a_ij = u_ij + beta * tanh(H_ij)
  e_ij = c * [(a_ij / d_ij)^12 - 2 (a_ij / d_ij)^6]

The binding energy is the sum of e_ij over the configured pair scope and the
predicted affinity is sigma * E.  The physics residual is the sum over the same
scope of (de_ij / dd_ij)^2, which vanishes when every pair sits at its minimum.
"""

import collections
import math

import numpy as np

from . import autodiff as ad
from .json_wrappers import (ConfigError, JsonObjectWrapper, one_of, optional, real_number,
                            typed_string_map, wrapped_property)
from .vdw_radii import VdwRadiiTable, default_radii_table

PAIR_SCOPES = ('all_pairs', 'edges_only')

DEFAULT_D_FLOOR = 0.5


class DistanceFloorError(ValueError):
    pass


class PhysicsConfig(JsonObjectWrapper):
    __slots__ = ()

    c = wrapped_property('c', float, default=1.0, doc='Pair energy coefficient.')
    beta = wrapped_property('beta',
                            optional(real_number),
                            default=0.5,
                            doc='Offset bound in Angstrom; null leaves offsets unbounded.')
    d_floor = wrapped_property('d_floor', float, default=DEFAULT_D_FLOOR)
    pair_scope = wrapped_property('pair_scope', one_of(*PAIR_SCOPES), default='all_pairs')
    radii = wrapped_property('radii',
                             typed_string_map(float),
                             default=lambda: default_radii_table().to_json())

    def validate(self):
        if self.beta is not None and not self.beta > 0:
            raise ConfigError('beta must be positive or null, but received: %r' % (self.beta, ))
        if not self.d_floor > 0:
            raise ConfigError('d_floor must be positive, but received: %r' % (self.d_floor, ))
        self.radii_table()
        return self

    def radii_table(self):
        try:
            return VdwRadiiTable(self.radii)
        except ValueError as e:
            raise ConfigError('radii: %s' % (e, ))


class AffinityHead(object):
    """Holds the trainable scale sigma of y = sigma * E."""

    __slots__ = ('sigma', )

    def __init__(self, sigma_init=-0.1):
        self.sigma = ad.Parameter('sigma', float(sigma_init))


class InteractionMatrix(object):
    """Ligand x protein offsets and per-pair energies of one complex."""

    __slots__ = ('H', 'H_bounded', 'pair_energies')

    def __init__(self, H, H_bounded, pair_energies):
        self.H = H
        self.H_bounded = H_bounded
        self.pair_energies = pair_energies

    @property
    def shape(self):
        return self.H.shape


def interaction_matrix(h_ligand, h_protein):
    """H = h_M h_P^T, shape M x N."""
    h_ligand = ad.as_tensor(h_ligand)
    h_protein = ad.as_tensor(h_protein)
    if h_ligand.ndim != 2 or h_protein.ndim != 2 or h_ligand.shape[1] != h_protein.shape[1]:
        raise ad.ShapeError('interaction_matrix: incompatible shapes %r and %r' %
                            (h_ligand.shape, h_protein.shape))
    return ad.matmul(h_ligand, ad.transpose(h_protein))


def bound_offsets(H, beta):
    if beta is None:
        return ad.as_tensor(H)
    return ad.scalar_mul(ad.tanh(H), beta)


def check_distance_floor(d, d_floor, complex_id=None):
    d = np.asarray(d, dtype=np.float64)
    if d.size and d.min() < d_floor:
        where = '' if complex_id is None else 'complex %r: ' % (complex_id, )
        raise DistanceFloorError('%spair distance %r is below the floor %r' %
                                 (where, float(d.min()), d_floor))


def lj_energy(a, d, c=1.0):
    """Differentiable c * [(a/d)^12 - 2 (a/d)^6]; `a` and `d` may be Tensors or arrays."""
    r6 = ad.power(ad.divide(a, d), 6)
    return ad.scalar_mul(ad.sub(ad.square(r6), ad.scalar_mul(r6, 2.0)), c)


def lj_energy_derivative(a, d, c=1.0):
    """Differentiable closed-form d e / d d = (12 c / d) * [(a/d)^6 - (a/d)^12]."""
    d_tensor = ad.as_tensor(d)
    r6 = ad.power(ad.divide(a, d_tensor), 6)
    return ad.mul(ad.sub(r6, ad.square(r6)), ad.divide(12.0 * c, d_tensor))


def pair_energy(u, h_b, d, c=1.0, d_floor=DEFAULT_D_FLOOR):
    """Pair energy with minimum -c exactly at d = u + h_b."""
    check_distance_floor(d, d_floor)
    a = np.asarray(u, dtype=np.float64) + np.asarray(h_b, dtype=np.float64)
    out = lj_energy(a, np.asarray(d, dtype=np.float64), c).data
    return float(out) if out.ndim == 0 else out


def pair_energy_derivative(u, h_b, d, c=1.0, d_floor=DEFAULT_D_FLOOR):
    check_distance_floor(d, d_floor)
    a = np.asarray(u, dtype=np.float64) + np.asarray(h_b, dtype=np.float64)
    out = lj_energy_derivative(a, np.asarray(d, dtype=np.float64), c).data
    return float(out) if out.ndim == 0 else out


def pair_radius_sums(g, cfg):
    table = cfg.radii_table()
    return table.pair_sums([a.element for a in g.ligand_atoms],
                           [a.element for a in g.protein_atoms])


def pair_distances(g, cfg, geometry_free_distance=None):
    """M x N pair distances; a constant matrix when geometry is disabled."""
    if geometry_free_distance is not None:
        d = np.full((g.num_ligand_atoms, g.num_protein_atoms), float(geometry_free_distance))
    else:
        d = g.ligand_protein_distances()
    check_distance_floor(d, cfg.d_floor, g.complex_id)
    return d


def pair_scope_mask(g, cfg):
    if cfg.pair_scope == 'edges_only':
        return g.ligand_protein_edge_mask()
    return np.ones((g.num_ligand_atoms, g.num_protein_atoms), dtype=np.float64)


PairGeometry = collections.namedtuple('PairGeometry', ['radius_sums', 'distances', 'mask'])


def pair_geometry(g, cfg, geometry_free_distance=None):
    return PairGeometry(radius_sums=pair_radius_sums(g, cfg),
                        distances=pair_distances(g, cfg, geometry_free_distance),
                        mask=pair_scope_mask(g, cfg))


def _geometry(g, cfg, geometry, geometry_free_distance):
    if geometry is None:
        geometry = pair_geometry(g, cfg, geometry_free_distance)
    return geometry


def pair_energies(g, H_bounded, cfg, geometry=None, geometry_free_distance=None):
    """M x N Tensor of e_ij over every ligand x protein pair (scope not applied)."""
    geometry = _geometry(g, cfg, geometry, geometry_free_distance)
    a = ad.add(geometry.radius_sums, H_bounded)
    return lj_energy(a, geometry.distances, cfg.c)


def vdw_energy(g, H_bounded, cfg, geometry=None, geometry_free_distance=None):
    """Scalar Tensor E = sum of in-scope pair energies."""
    geometry = _geometry(g, cfg, geometry, geometry_free_distance)
    e = pair_energies(g, H_bounded, cfg, geometry=geometry)
    return ad.sum(ad.mul(e, geometry.mask))


def physics_residual(g, H_bounded, cfg, geometry=None, geometry_free_distance=None):
    """Scalar Tensor sum of squared in-scope pair energy derivatives."""
    geometry = _geometry(g, cfg, geometry, geometry_free_distance)
    a = ad.add(geometry.radius_sums, H_bounded)
    derivative = lj_energy_derivative(a, geometry.distances, cfg.c)
    return ad.sum(ad.mul(ad.square(derivative), geometry.mask))


def predict_affinity(energy, head):
    """y = sigma * E.  `head` is an AffinityHead, a sigma Tensor or a number."""
    if isinstance(head, AffinityHead):
        head = ad.Tensor(head.sigma.value)
    return ad.mul(head, energy)


def compute_interaction(h_ligand, h_protein, g, cfg, geometry=None, geometry_free_distance=None):
    H = interaction_matrix(h_ligand, h_protein)
    H_bounded = bound_offsets(H, cfg.beta)
    energies = pair_energies(g,
                             H_bounded,
                             cfg,
                             geometry=geometry,
                             geometry_free_distance=geometry_free_distance)
    return InteractionMatrix(H, H_bounded, energies)


ResidueContribution = collections.namedtuple(
    'ResidueContribution', ['rank', 'residue_index', 'chain_id', 'residue_name', 'min_pair_energy'])


def explain(pair_energies, g, fraction=0.10):
    """Ranks the residues touched by the lowest-energy ligand x protein pairs.

    The lowest ceil(fraction * M * N) pair energies are selected, ties broken by
    (residue_index, chain_id, ligand index, protein index).  Residues are
    deduplicated by (residue_index, chain_id) and ordered by their minimum pair
    energy.
    """
    if not 0 < fraction <= 1:
        raise ValueError('fraction must be in (0, 1], but received: %r' % (fraction, ))
    energies = np.asarray(getattr(pair_energies, 'data', pair_energies), dtype=np.float64)
    num_ligand, num_protein = energies.shape
    if num_protein != len(g.protein_atoms) or num_ligand != len(g.ligand_atoms):
        raise ad.ShapeError('explain: energy matrix %r does not match the graph' %
                            (energies.shape, ))
    total = num_ligand * num_protein
    count = min(total, max(1, int(math.ceil(fraction * total - 1e-9))))

    def sort_key(pair):
        i, j = pair
        atom = g.protein_atoms[j]
        return (energies[i, j], atom.residue_index, atom.chain_id, i, j)

    pairs = sorted(((i, j) for i in range(num_ligand) for j in range(num_protein)),
                   key=sort_key)[:count]
    seen = set()
    report = []
    for i, j in pairs:
        atom = g.protein_atoms[j]
        key = (atom.residue_index, atom.chain_id)
        if key in seen:
            continue
        seen.add(key)
        report.append(
            ResidueContribution(rank=len(report) + 1,
                                residue_index=atom.residue_index,
                                chain_id=atom.chain_id,
                                residue_name=atom.residue_name,
                                min_pair_energy=float(energies[i, j])))
    return report


EXPLAIN_HEADER = '#rank\tresidue_index\tchain\tresidue_name\tmin_pair_energy\n'


def format_explain_report(report):
    lines = [EXPLAIN_HEADER]
    for row in report:
        lines.append('%d\t%d\t%s\t%s\t%.8g\n' % (row.rank, row.residue_index, row.chain_id,
                                                row.residue_name, row.min_pair_energy))
    return ''.join(lines)
