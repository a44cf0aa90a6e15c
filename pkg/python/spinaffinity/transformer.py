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
"""Distance-only graph transformer encoder.

Coordinates enter the encoder only through edge lengths, expanded on a
Gaussian radial basis, so every output is unchanged by rotations, reflections
and translations of the input complex.

Each layer updates every node i from its in-edges j -> i:

  q_i  = MLP_q(h0_i)            (or h_i when query_source == 'previous')
  k_ij = MLP_k([rbf_ij | kind_ij | h_i | h_j])
  v_ij = MLP_v([rbf_ij | kind_ij | h_i | h_j])
  a_ij = softmax_j(q_i . k_ij / sqrt(head_dim))     per head
  m_i  = Out(sum_j a_ij v_ij * Linear(rbf_ij))
  h_i <- h_i + m_i
"""

import collections
import math

import numpy as np

from . import autodiff as ad
from . import featurize
from .graph import EdgeKind
from .json_wrappers import (ConfigError, JsonObjectWrapper, one_of, wrapped_property)

QUERY_SOURCES = ('initial', 'previous')


class EmptyNeighborhoodError(ValueError):
    pass


class ModelConfig(JsonObjectWrapper):
    __slots__ = ()

    hidden_dim = wrapped_property('hidden_dim', int, default=64, doc='Node representation width.')
    num_layers = wrapped_property('num_layers', int, default=4)
    num_heads = wrapped_property('num_heads', int, default=4)
    rbf_centers = wrapped_property('rbf_centers', int, default=20)
    rbf_min = wrapped_property('rbf_min', float, default=0.0)
    rbf_max = wrapped_property('rbf_max', float, default=10.0)
    k = wrapped_property('k', int, default=8, doc='In-degree of the nearest-neighbor graph.')
    query_source = wrapped_property('query_source', one_of(*QUERY_SOURCES), default='initial')
    disable_geometry = wrapped_property('disable_geometry', bool, default=False)
    geometry_free_distance = wrapped_property(
        'geometry_free_distance',
        float,
        default=4.0,
        doc='Distance substituted for every pair distance when geometry is disabled.')
    sigma_init = wrapped_property('sigma_init', float, default=-0.1)
    init_seed = wrapped_property('init_seed', int, default=0)

    @property
    def head_dim(self):
        return self.hidden_dim // self.num_heads

    def validate(self):
        if self.hidden_dim < 1 or self.num_heads < 1:
            raise ConfigError('hidden_dim and num_heads must be positive')
        if self.hidden_dim % self.num_heads != 0:
            raise ConfigError('hidden_dim (%d) must be divisible by num_heads (%d)' %
                              (self.hidden_dim, self.num_heads))
        if self.num_layers < 1:
            raise ConfigError('num_layers must be >= 1, but received: %d' % (self.num_layers, ))
        if self.rbf_centers < 2:
            raise ConfigError('rbf_centers must be >= 2, but received: %d' % (self.rbf_centers, ))
        if not self.rbf_max > self.rbf_min:
            raise ConfigError('rbf_max (%r) must exceed rbf_min (%r)' %
                              (self.rbf_max, self.rbf_min))
        if self.k < 1:
            raise ConfigError('k must be >= 1, but received: %d' % (self.k, ))
        if not self.geometry_free_distance > 0:
            raise ConfigError('geometry_free_distance must be positive')
        return self


class RbfEmbedding(object):
    """Gaussian radial basis with evenly spaced centers; width equals the spacing."""

    __slots__ = ('centers', 'width')

    def __init__(self, num_centers=20, rbf_min=0.0, rbf_max=10.0):
        centers = np.linspace(rbf_min, rbf_max, num_centers)
        centers.setflags(write=False)
        self.centers = centers
        self.width = float(centers[1] - centers[0])

    @staticmethod
    def from_config(cfg):
        return RbfEmbedding(cfg.rbf_centers, cfg.rbf_min, cfg.rbf_max)

    @property
    def num_centers(self):
        return self.centers.shape[0]

    def __call__(self, distances):
        """Returns an array of shape distances.shape + (num_centers,)."""
        d = np.asarray(distances, dtype=np.float64)[..., np.newaxis]
        return np.exp(-(d - self.centers)**2 / (2 * self.width * self.width))


def rbf_embed(d, rbf=None):
    if rbf is None:
        rbf = RbfEmbedding()
    if d < 0:
        raise ValueError('distance must be non-negative, but received: %r' % (d, ))
    return rbf(d)


def _mlp_shapes(prefix, in_dim, hidden_dim):
    return [
        (prefix + '.0.weight', (in_dim, hidden_dim)),
        (prefix + '.0.bias', (hidden_dim, )),
        (prefix + '.norm.gain', (hidden_dim, )),
        (prefix + '.norm.bias', (hidden_dim, )),
        (prefix + '.1.weight', (hidden_dim, hidden_dim)),
        (prefix + '.1.bias', (hidden_dim, )),
    ]


def edge_input_dim(cfg):
    return cfg.rbf_centers + len(EdgeKind) + 2 * cfg.hidden_dim


def encoder_parameter_shapes(cfg):
    """Ordered (name, shape) list of every encoder parameter."""
    d = cfg.hidden_dim
    shapes = [
        ('embed.protein.weight', (featurize.PROTEIN_FEATURE_DIM, d)),
        ('embed.protein.bias', (d, )),
        ('embed.ligand.weight', (featurize.LIGAND_FEATURE_DIM, d)),
        ('embed.ligand.bias', (d, )),
    ]
    for layer in range(cfg.num_layers):
        prefix = 'layers.%d.' % (layer, )
        shapes += _mlp_shapes(prefix + 'query', d, d)
        shapes += _mlp_shapes(prefix + 'key', edge_input_dim(cfg), d)
        shapes += _mlp_shapes(prefix + 'value', edge_input_dim(cfg), d)
        shapes += [
            (prefix + 'gate.weight', (cfg.rbf_centers, d)),
            (prefix + 'gate.bias', (d, )),
            (prefix + 'out.0.weight', (d, d)),
            (prefix + 'out.0.bias', (d, )),
            (prefix + 'out.1.weight', (d, d)),
            (prefix + 'out.1.bias', (d, )),
        ]
    return shapes


def _fan_in(name, shapes_by_name):
    if name.endswith('.weight'):
        return shapes_by_name[name][0]
    return shapes_by_name[name[:-len('bias')] + 'weight'][0]


class EncoderParams(object):
    """Named encoder parameters.

    Affine weights and biases are drawn from uniform(-s, s), s = 1/sqrt(fan_in);
    layer normalization gains start at 1 and biases at 0.
    """

    __slots__ = ('parameters', )

    def __init__(self, parameters):
        self.parameters = collections.OrderedDict((p.name, p) for p in parameters)

    @staticmethod
    def initialize(cfg, rng=None):
        if rng is None:
            rng = np.random.default_rng(cfg.init_seed)
        shapes = encoder_parameter_shapes(cfg)
        shapes_by_name = dict(shapes)
        parameters = []
        for name, shape in shapes:
            if name.endswith('.norm.gain'):
                value = np.ones(shape)
            elif name.endswith('.norm.bias'):
                value = np.zeros(shape)
            else:
                s = 1.0 / math.sqrt(_fan_in(name, shapes_by_name))
                value = rng.uniform(-s, s, size=shape)
            parameters.append(ad.Parameter(name, value))
        return EncoderParams(parameters)

    def __getitem__(self, name):
        return self.parameters[name]

    def __iter__(self):
        return iter(self.parameters.values())

    def tensors(self, tape=None):
        """Returns {name: Tensor}, recorded on `tape` when one is given."""
        if tape is None:
            return {name: ad.Tensor(p.value) for name, p in self.parameters.items()}
        return {name: tape.watch(p) for name, p in self.parameters.items()}


def _as_tensors(params, tape=None):
    if isinstance(params, EncoderParams):
        return params.tensors(tape)
    return params


def _mlp(x, t, prefix):
    hidden = ad.linear(x, t[prefix + '.0.weight'], t[prefix + '.0.bias'])
    hidden = ad.relu(ad.layer_norm(hidden, t[prefix + '.norm.gain'], t[prefix + '.norm.bias']))
    return ad.linear(hidden, t[prefix + '.1.weight'], t[prefix + '.1.bias'])


def edge_distances(g, cfg):
    if cfg.disable_geometry:
        return np.full(g.num_edges, cfg.geometry_free_distance)
    return np.asarray(g.distance)


def embed_initial(g, params):
    """Returns h0 with protein rows first, then ligand rows."""
    t = _as_tensors(params)
    h_protein = ad.linear(g.protein_features, t['embed.protein.weight'], t['embed.protein.bias'])
    h_ligand = ad.linear(g.ligand_features, t['embed.ligand.weight'], t['embed.ligand.bias'])
    return ad.concat([h_protein, h_ligand], axis=0)


def attention_messages(h, h0, g, params, layer, cfg, rbf=None, return_weights=False):
    """Computes the aggregated, output-projected message for every node.

    @param return_weights: if True, also returns the (E, num_heads) attention weight array.
    """
    t = _as_tensors(params)
    if rbf is None:
        rbf = RbfEmbedding.from_config(cfg)
    num_nodes = g.num_nodes
    if np.any(g.in_degrees() == 0):
        raise EmptyNeighborhoodError('node %d has no in-edges' %
                                     (int(np.argmin(g.in_degrees())), ))
    prefix = 'layers.%d.' % (layer, )
    num_edges = g.num_edges
    heads = cfg.num_heads
    head_dim = cfg.head_dim

    r = rbf(edge_distances(g, cfg))
    query_input = h0 if cfg.query_source == 'initial' else h
    q = ad.gather_rows(_mlp(query_input, t, prefix + 'query'), g.dst)
    edge_input = ad.concat(
        [r, g.edge_kind_one_hot(),
         ad.gather_rows(h, g.dst),
         ad.gather_rows(h, g.src)], axis=1)
    k = _mlp(edge_input, t, prefix + 'key')
    v = _mlp(edge_input, t, prefix + 'value')

    scores = ad.sum(ad.reshape(ad.mul(q, k), (num_edges, heads, head_dim)), axis=2)
    weights = ad.segment_softmax(ad.scalar_mul(scores, 1.0 / math.sqrt(head_dim)), g.dst,
                                 num_nodes)
    attended = ad.reshape(
        ad.mul(ad.reshape(v, (num_edges, heads, head_dim)),
               ad.reshape(weights, (num_edges, heads, 1))), (num_edges, cfg.hidden_dim))
    gate = ad.linear(r, t[prefix + 'gate.weight'], t[prefix + 'gate.bias'])
    aggregated = ad.segment_sum(ad.mul(attended, gate), g.dst, num_nodes)
    out = ad.linear(ad.swish(ad.linear(aggregated, t[prefix + 'out.0.weight'],
                                       t[prefix + 'out.0.bias'])), t[prefix + 'out.1.weight'],
                    t[prefix + 'out.1.bias'])
    if return_weights:
        return out, weights.data
    return out


def attention_message(node, h, h0, g, params, layer, cfg, rbf=None):
    """The message for a single destination node."""
    if not np.any(np.asarray(g.dst) == node):
        raise EmptyNeighborhoodError('node %d has no in-edges' % (node, ))
    return ad.gather_rows(attention_messages(h, h0, g, params, layer, cfg, rbf=rbf), [node])


def layer_forward(h, h0, g, params, layer, cfg, rbf=None):
    """Residual update h + messages."""
    return ad.add(h, attention_messages(h, h0, g, params, layer, cfg, rbf=rbf))


def encode(g, params, cfg, tape=None):
    """Returns (h_P, h_M), the final protein and ligand node representations.

    @param params: EncoderParams, or a {name: Tensor} map already recorded on a tape.
    """
    if cfg.num_layers < 1:
        raise ConfigError('num_layers must be >= 1')
    t = _as_tensors(params, tape)
    rbf = RbfEmbedding.from_config(cfg)
    h0 = embed_initial(g, t)
    h = h0
    for layer in range(cfg.num_layers):
        h = layer_forward(h, h0, g, t, layer, cfg, rbf=rbf)
    n = g.num_protein_atoms
    h_protein = ad.gather_rows(h, np.arange(n))
    h_ligand = ad.gather_rows(h, np.arange(n, g.num_nodes))
    return h_protein, h_ligand
