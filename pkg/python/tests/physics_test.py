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
"""Tests for physics.py"""

import numpy as np
import pytest

from conftest import make_ligand_atom, make_protein_atom
from spinaffinity import autodiff as ad
from spinaffinity import complex_model, graph, physics

# Carbon (1.9) + oxygen (1.7) in the shipped radii table.
CO_RADIUS_SUM = 3.6


def _pair_graph(distance, k=1):
    c = complex_model.Complex('pair',
                              protein=[make_protein_atom((0, 0, 0), 'C')],
                              ligand=[make_ligand_atom((distance, 0, 0), 'O')])
    return graph.build_knn_graph(c, k)


def test_interaction_matrix_scalar():
    np.testing.assert_array_equal(physics.interaction_matrix([[2.0]], [[3.0]]).data, [[6]])


def test_interaction_matrix_zero_ligand():
    H = physics.interaction_matrix(np.zeros((2, 4)), np.ones((3, 4))).data
    np.testing.assert_array_equal(H, np.zeros((2, 3)))


def test_interaction_matrix_matches_dot():
    rng = np.random.default_rng(0)
    h_ligand = rng.normal(size=(3, 5))
    h_protein = rng.normal(size=(4, 5))
    np.testing.assert_allclose(physics.interaction_matrix(h_ligand, h_protein).data,
                               h_ligand.dot(h_protein.T),
                               rtol=1e-12)


def test_interaction_matrix_shape_mismatch():
    with pytest.raises(ad.ShapeError):
        physics.interaction_matrix(np.zeros((2, 4)), np.zeros((3, 5)))


def test_bounded_offsets():
    H = np.array([[-100.0, 0.0, 100.0]])
    np.testing.assert_allclose(physics.bound_offsets(H, 0.5).data, [[-0.5, 0, 0.5]])
    np.testing.assert_array_equal(physics.bound_offsets(H, None).data, H)


def test_pair_energy_minimum():
    assert physics.pair_energy(4.0, 0.0, 4.0, c=1.0) == -1.0
    assert physics.pair_energy(3.5, 0.5, 4.0, c=2.5) == pytest.approx(-2.5, rel=1e-15)


def test_pair_energy_direct_evaluation():
    assert physics.pair_energy(4.0, 0.0, 8.0, c=1.0) == -0.031005859375


def test_pair_energy_zero_coefficient():
    for d in (1.0, 3.0, 10.0):
        assert physics.pair_energy(4.0, 0.0, d, c=0.0) == 0


def test_pair_energy_is_additive():
    both = physics.pair_energy(np.array([4.0, 4.0]), 0.0, np.array([5.0, 5.0]))
    assert both.sum() == 2 * physics.pair_energy(4.0, 0.0, 5.0)


def test_pair_energy_distance_floor():
    with pytest.raises(physics.DistanceFloorError):
        physics.pair_energy(4.0, 0.0, 0.3)


def test_derivative_vanishes_at_minimum():
    assert physics.pair_energy_derivative(4.0, 0.0, 4.0) == 0


def test_derivative_repulsive_wall_matches_finite_difference():
    step = 1e-6
    numeric = (physics.pair_energy(4.0, 0.0, 2.0 + step) -
               physics.pair_energy(4.0, 0.0, 2.0 - step)) / (2 * step)
    analytic = physics.pair_energy_derivative(4.0, 0.0, 2.0)
    assert analytic < -1000
    assert analytic == pytest.approx(numeric, rel=1e-4)


def test_derivative_attractive_tail():
    values = [physics.pair_energy_derivative(4.0, 0.0, d) for d in (5.0, 10.0, 50.0)]
    assert all(v > 0 for v in values)
    assert values[0] > values[1] > values[2]


def test_derivative_matches_tape_gradient():
    tape = ad.Tape()
    d = tape.watch(ad.Parameter('d', [2.5, 3.7, 6.0]))
    a = np.array([3.0, 3.9, 4.2])
    grads = tape.backward(ad.sum(physics.lj_energy(a, d, 1.5)))
    np.testing.assert_allclose(grads['d'],
                               physics.lj_energy_derivative(a, d.data, 1.5).data,
                               rtol=1e-12)


def test_single_pair_at_radius_sum():
    g = _pair_graph(CO_RADIUS_SUM)
    energy = physics.vdw_energy(g, np.zeros((1, 1)), physics.PhysicsConfig())
    assert energy.item() == pytest.approx(-1.0, rel=1e-14)


def test_sum_over_all_pairs():
    c = complex_model.Complex(
        'two',
        protein=[make_protein_atom((0, 0, 0), 'C'), make_protein_atom((0, 0, 9), 'C')],
        ligand=[make_ligand_atom((CO_RADIUS_SUM, 0, 0), 'O')])
    g = graph.build_knn_graph(c, 1)
    cfg = physics.PhysicsConfig()
    energy = physics.vdw_energy(g, np.zeros((1, 2)), cfg).item()
    far = np.linalg.norm([CO_RADIUS_SUM, 0, -9])
    expected = -1.0 + physics.pair_energy(CO_RADIUS_SUM, 0.0, far)
    assert energy == pytest.approx(expected, rel=1e-12)

    cfg.pair_scope = 'edges_only'
    # With k=1 the far protein atom is only joined to the near one.
    assert physics.vdw_energy(g, np.zeros((1, 2)), cfg).item() == pytest.approx(-1.0, rel=1e-12)


def test_predict_affinity():
    assert physics.predict_affinity(ad.Tensor(-5.0), 0.0).item() == 0
    assert physics.predict_affinity(ad.Tensor(-5.0), -1.0).item() == 5.0
    head = physics.AffinityHead(-0.1)
    assert physics.predict_affinity(ad.Tensor(-5.0), head).item() == pytest.approx(0.5)


def test_residual_zero_at_minima():
    g = _pair_graph(CO_RADIUS_SUM)
    residual = physics.physics_residual(g, np.zeros((1, 1)), physics.PhysicsConfig())
    assert residual.item() == pytest.approx(0.0, abs=1e-24)


def test_residual_single_displaced_pair():
    g = _pair_graph(4.4)
    residual = physics.physics_residual(g, np.zeros((1, 1)), physics.PhysicsConfig()).item()
    expected = physics.pair_energy_derivative(CO_RADIUS_SUM, 0.0, 4.4)**2
    assert residual == pytest.approx(expected, rel=1e-12)


def test_learned_offset_moves_minimum():
    g = _pair_graph(4.0)
    cfg = physics.PhysicsConfig({'beta': None})
    offset = np.array([[4.0 - CO_RADIUS_SUM]])
    assert physics.physics_residual(g, offset, cfg).item() == pytest.approx(0.0, abs=1e-20)


def test_pair_distance_floor_names_complex():
    c = complex_model.Complex('close',
                              protein=[make_protein_atom((0, 0, 0))],
                              ligand=[make_ligand_atom((0.2, 0, 0))])
    g = graph.build_knn_graph(c, 1)
    with pytest.raises(physics.DistanceFloorError, match='close'):
        physics.pair_geometry(g, physics.PhysicsConfig())


def test_geometry_free_distances(toy_complex):
    g = graph.build_complete_graph(toy_complex)
    geometry = physics.pair_geometry(g, physics.PhysicsConfig(), geometry_free_distance=4.0)
    np.testing.assert_array_equal(geometry.distances, np.full((2, 2), 4.0))


def test_config_validation():
    with pytest.raises(physics.ConfigError):
        physics.PhysicsConfig({'d_floor': 0}).validate()
    with pytest.raises(physics.ConfigError):
        physics.PhysicsConfig({'radii': {'C': 1.9}}).validate()


def _residue_graph(residue_indices, ligand_count=1):
    protein = [
        make_protein_atom((4.0 * i, 0, 0), residue_name='GLY', residue_index=r)
        for i, r in enumerate(residue_indices)
    ]
    ligand = [make_ligand_atom((4.0 * i, 5.0, 0)) for i in range(ligand_count)]
    return graph.build_knn_graph(complex_model.Complex('explain', protein, ligand), 1)


def test_explain_ties_ordered_by_residue():
    g = _residue_graph([3, 1, 2])
    report = physics.explain(np.full((1, 3), -1.0), g, fraction=1.0)
    assert [r.residue_index for r in report] == [1, 2, 3]
    assert [r.rank for r in report] == [1, 2, 3]


def test_explain_single_low_pair_first():
    g = _residue_graph([1, 2, 3, 4], ligand_count=2)
    energies = np.full((2, 4), -0.1)
    energies[1, 2] = -5.0
    report = physics.explain(energies, g, fraction=0.1)
    assert len(report) == 1
    assert report[0].residue_index == 3
    assert report[0].min_pair_energy == -5.0


def test_explain_deduplicates_residues():
    g = _residue_graph([7, 7, 8])
    energies = np.array([[-3.0, -2.0, -1.0]])
    report = physics.explain(energies, g, fraction=1.0)
    assert [(r.residue_index, r.min_pair_energy) for r in report] == [(7, -3.0), (8, -1.0)]


def test_explain_planted_pair():
    protein = [
        make_protein_atom((0, 0, 0), 'C', 'ALA', residue_index=1),
        make_protein_atom((12, 0, 0), 'C', 'TRP', residue_index=7),
        make_protein_atom((0, 12, 0), 'C', 'SER', residue_index=9),
    ]
    ligand = [
        make_ligand_atom((12 + CO_RADIUS_SUM, 0, 0), 'O'),
        make_ligand_atom((6, 6, 8), 'O'),
    ]
    g = graph.build_knn_graph(complex_model.Complex('planted', protein, ligand), 2)
    energies = physics.pair_energies(g, np.zeros((2, 3)), physics.PhysicsConfig())
    report = physics.explain(energies, g, fraction=0.2)
    assert report[0].residue_index == 7
    assert report[0].residue_name == 'TRP'
    assert report[0].min_pair_energy == pytest.approx(-1.0, rel=1e-12)


def test_explain_rejects_bad_fraction():
    g = _residue_graph([1])
    with pytest.raises(ValueError):
        physics.explain(np.zeros((1, 1)), g, fraction=0)


def test_format_explain_report():
    report = [physics.ResidueContribution(1, 42, 'B', 'TYR', -0.75)]
    assert physics.format_explain_report(report) == (physics.EXPLAIN_HEADER +
                                                     '1\t42\tB\tTYR\t-0.75\n')
