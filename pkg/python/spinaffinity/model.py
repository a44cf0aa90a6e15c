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
"""Encoder plus interaction head as a single predictor."""

import collections
import copy

import numpy as np

from . import autodiff as ad
from . import graph as graph_lib
from . import physics
from . import transformer

PreparedComplex = collections.namedtuple('PreparedComplex',
                                         ['complex_id', 'graph', 'geometry', 'label'])

ForwardResult = collections.namedtuple(
    'ForwardResult', ['prediction', 'energy', 'residual', 'interaction', 'h_protein', 'h_ligand'])


class SpinModel(object):
    """Parameters and configuration of a complete affinity model.

    Parameter values are only changed by the optimizer; prediction does not
    mutate the model and may run concurrently from several threads.
    """

    def __init__(self, model_config=None, physics_config=None, encoder_params=None, head=None):
        if model_config is None:
            model_config = transformer.ModelConfig()
        if physics_config is None:
            physics_config = physics.PhysicsConfig()
        self.model_config = copy.deepcopy(model_config).validate()
        self.physics_config = copy.deepcopy(physics_config).validate()
        if encoder_params is None:
            encoder_params = transformer.EncoderParams.initialize(self.model_config)
        if head is None:
            head = physics.AffinityHead(self.model_config.sigma_init)
        self.encoder_params = encoder_params
        self.head = head

    def parameters(self):
        """Ordered {name: Parameter}, encoder parameters first, sigma last."""
        params = collections.OrderedDict(self.encoder_params.parameters)
        params[self.head.sigma.name] = self.head.sigma
        return params

    def parameter_values(self):
        return collections.OrderedDict(
            (name, p.value.copy()) for name, p in self.parameters().items())

    def load_parameter_values(self, values):
        params = self.parameters()
        if set(values) != set(params):
            raise ValueError('parameter names do not match the model: missing %r, unexpected %r' %
                             (sorted(set(params) - set(values)), sorted(set(values) - set(params))))
        for name, value in values.items():
            value = np.asarray(value, dtype=np.float64)
            if value.shape != params[name].value.shape:
                raise ValueError('parameter %r has shape %r, expected %r' %
                                 (name, value.shape, params[name].value.shape))
            params[name].value = value.copy()

    @property
    def geometry_free_distance(self):
        if self.model_config.disable_geometry:
            return self.model_config.geometry_free_distance
        return None

    def prepare(self, c):
        """Builds the graph and pair geometry of a complex; independent of parameters."""
        g = graph_lib.build_graph(c, self.model_config.k, self.model_config.disable_geometry)
        geometry = physics.pair_geometry(g, self.physics_config, self.geometry_free_distance)
        return PreparedComplex(complex_id=c.id, graph=g, geometry=geometry, label=c.affinity)

    def tensors(self, tape=None):
        t = self.encoder_params.tensors(tape)
        sigma = self.head.sigma
        t[sigma.name] = tape.watch(sigma) if tape is not None else ad.Tensor(sigma.value)
        return t

    def forward(self, prepared, tape=None, tensors=None):
        """Runs the full model on a prepared complex.

        @param tensors: parameter tensors already recorded on `tape`, shared across a batch.
        """
        if tensors is None:
            tensors = self.tensors(tape)
        g = prepared.graph
        h_protein, h_ligand = transformer.encode(g, tensors, self.model_config)
        interaction = physics.compute_interaction(h_ligand,
                                                  h_protein,
                                                  g,
                                                  self.physics_config,
                                                  geometry=prepared.geometry)
        energy = ad.sum(ad.mul(interaction.pair_energies, prepared.geometry.mask))
        residual = physics.physics_residual(g,
                                            interaction.H_bounded,
                                            self.physics_config,
                                            geometry=prepared.geometry)
        prediction = physics.predict_affinity(energy, tensors[self.head.sigma.name])
        return ForwardResult(prediction=prediction,
                             energy=energy,
                             residual=residual,
                             interaction=interaction,
                             h_protein=h_protein,
                             h_ligand=h_ligand)

    def predict(self, c):
        """Predicted affinity (pK) of a Complex."""
        return self.forward(self.prepare(c)).prediction.item()

    def predict_prepared(self, prepared):
        return self.forward(prepared).prediction.item()
