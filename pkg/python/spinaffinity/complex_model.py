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
"""Typed protein-ligand complexes and the JSON interchange format.

An interchange document looks like:

  {
    "id": "1abc",
    "affinity": 6.2,
    "protein": [{"element": "C", "residue_name": "ALA", "residue_index": 12,
                 "chain_id": "A", "is_backbone": true, "xyz": [1.0, 2.0, 3.0]}, ...],
    "ligand": [{"element": "O", "hybridization": "sp2", "formal_charge": 0,
                "degree": 1, "is_aromatic": false, "xyz": [4.0, 2.0, 3.0]}, ...]
  }

Unknown keys are rejected.  Affinities are pK values (-log10 of the
dissociation or inhibition constant).
"""

import collections
import math

import numpy as np
import six
from scipy.spatial.distance import pdist

from .json_utils import decode_json, encode_json, is_json_number

HYBRIDIZATIONS = ('sp', 'sp2', 'sp3', 'other')

MAX_DEGREE = 8

# Atoms closer than this are treated as duplicates.
DUPLICATE_TOLERANCE = 1e-3

_COMPLEX_KEYS = ('id', 'affinity', 'protein', 'ligand')
_PROTEIN_KEYS = ('element', 'residue_name', 'residue_index', 'chain_id', 'is_backbone', 'xyz')
_LIGAND_KEYS = ('element', 'hybridization', 'formal_charge', 'degree', 'is_aromatic', 'xyz')


class ComplexFormatError(ValueError):
    pass


class ComplexSyntaxError(ComplexFormatError):
    pass


class ComplexSchemaError(ComplexFormatError):
    pass


class ComplexValidationError(ComplexFormatError):
    pass


def normalize_element(symbol):
    """Returns the canonical capitalization of an element symbol, e.g. 'CL' -> 'Cl'."""
    symbol = symbol.strip()
    return symbol[:1].upper() + symbol[1:].lower()


ProteinAtom = collections.namedtuple(
    'ProteinAtom',
    ['element', 'residue_name', 'residue_index', 'chain_id', 'is_backbone', 'position'])

LigandAtom = collections.namedtuple(
    'LigandAtom',
    ['element', 'hybridization', 'formal_charge', 'degree', 'is_aromatic', 'position'])


class Complex(object):
    """A protein-ligand complex with an optional affinity label."""

    __slots__ = ('id', 'protein', 'ligand', 'affinity')

    def __init__(self, id, protein, ligand, affinity=None):
        self.id = id
        self.protein = tuple(protein)
        self.ligand = tuple(ligand)
        self.affinity = None if affinity is None else float(affinity)
        self._validate()

    @property
    def num_protein_atoms(self):
        return len(self.protein)

    @property
    def num_ligand_atoms(self):
        return len(self.ligand)

    def positions(self):
        """Returns the (N+M, 3) position matrix, protein atoms first."""
        return np.array([a.position for a in self.protein] + [a.position for a in self.ligand],
                        dtype=np.float64).reshape(-1, 3)

    def protein_positions(self):
        return np.array([a.position for a in self.protein], dtype=np.float64).reshape(-1, 3)

    def ligand_positions(self):
        return np.array([a.position for a in self.ligand], dtype=np.float64).reshape(-1, 3)

    def _validate(self):
        if len(self.protein) < 1:
            raise ComplexValidationError('complex %r has no protein atoms' % (self.id, ))
        if len(self.ligand) < 1:
            raise ComplexValidationError('complex %r has no ligand atoms' % (self.id, ))
        for atom in self.ligand:
            if atom.degree < 0 or atom.degree > MAX_DEGREE:
                raise ComplexValidationError('complex %r: ligand atom degree %d outside [0, %d]' %
                                             (self.id, atom.degree, MAX_DEGREE))
        positions = self.positions()
        if not np.all(np.isfinite(positions)):
            raise ComplexValidationError('complex %r has non-finite coordinates' % (self.id, ))
        if self.affinity is not None and not math.isfinite(self.affinity):
            raise ComplexValidationError('complex %r has a non-finite affinity' % (self.id, ))
        if len(positions) > 1:
            distances = pdist(positions)
            if distances.min() <= DUPLICATE_TOLERANCE:
                flat = int(np.argmin(distances))
                i, j = _condensed_to_pair(flat, len(positions))
                raise ComplexValidationError(
                    'complex %r: atoms %d and %d have duplicate coordinates %r' %
                    (self.id, i, j, tuple(positions[i])))

    def with_positions(self, positions):
        """Returns a copy of this complex with all atoms moved to `positions`."""
        positions = np.asarray(positions, dtype=np.float64)
        n = len(self.protein)
        protein = [a._replace(position=tuple(float(x) for x in p))
                   for a, p in zip(self.protein, positions[:n])]
        ligand = [a._replace(position=tuple(float(x) for x in p))
                  for a, p in zip(self.ligand, positions[n:])]
        return Complex(self.id, protein, ligand, self.affinity)

    def transformed(self, rotation, translation):
        """Applies x -> R x + b to every atom."""
        positions = self.positions().dot(np.asarray(rotation).T) + np.asarray(translation)
        return self.with_positions(positions)

    def permuted(self, protein_order, ligand_order):
        return Complex(self.id, [self.protein[i] for i in protein_order],
                       [self.ligand[i] for i in ligand_order], self.affinity)

    def to_json(self):
        d = collections.OrderedDict()
        d['id'] = self.id
        d['affinity'] = self.affinity
        d['protein'] = [
            collections.OrderedDict([
                ('element', a.element),
                ('residue_name', a.residue_name),
                ('residue_index', a.residue_index),
                ('chain_id', a.chain_id),
                ('is_backbone', a.is_backbone),
                ('xyz', list(a.position)),
            ]) for a in self.protein
        ]
        d['ligand'] = [
            collections.OrderedDict([
                ('element', a.element),
                ('hybridization', a.hybridization),
                ('formal_charge', a.formal_charge),
                ('degree', a.degree),
                ('is_aromatic', a.is_aromatic),
                ('xyz', list(a.position)),
            ]) for a in self.ligand
        ]
        return d

    def __repr__(self):
        return 'Complex(id=%r, N=%d, M=%d, affinity=%r)' % (self.id, len(self.protein),
                                                           len(self.ligand), self.affinity)


def _condensed_to_pair(index, n):
    i = 0
    row_length = n - 1
    while index >= row_length:
        index -= row_length
        i += 1
        row_length -= 1
    return i, i + 1 + index


def _check_keys(obj, keys, where):
    if not isinstance(obj, dict):
        raise ComplexSchemaError('%s: expected an object' % (where, ))
    missing = [k for k in keys if k not in obj]
    if missing:
        raise ComplexSchemaError('%s: missing field(s) %s' % (where, ', '.join(missing)))
    unknown = [k for k in obj if k not in keys]
    if unknown:
        raise ComplexSchemaError('%s: unknown field(s) %s' % (where, ', '.join(sorted(unknown))))


def _get_string(obj, key, where):
    value = obj[key]
    if not isinstance(value, six.string_types) or not value:
        raise ComplexSchemaError('%s.%s: expected a non-empty string' % (where, key))
    return six.text_type(value)


def _get_int(obj, key, where):
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, six.integer_types):
        raise ComplexSchemaError('%s.%s: expected an integer' % (where, key))
    return int(value)


def _get_bool(obj, key, where):
    value = obj[key]
    if not isinstance(value, bool):
        raise ComplexSchemaError('%s.%s: expected true or false' % (where, key))
    return value


def _get_xyz(obj, where):
    value = obj['xyz']
    if (not isinstance(value, list) or len(value) != 3 or
            not all(is_json_number(x) for x in value)):
        raise ComplexSchemaError('%s.xyz: expected an array of 3 numbers' % (where, ))
    return tuple(float(x) for x in value)


def _parse_protein_atom(obj, where):
    _check_keys(obj, _PROTEIN_KEYS, where)
    chain_id = _get_string(obj, 'chain_id', where)
    if len(chain_id) != 1:
        raise ComplexSchemaError('%s.chain_id: expected a single character, but received %r' %
                                 (where, chain_id))
    return ProteinAtom(element=normalize_element(_get_string(obj, 'element', where)),
                       residue_name=_get_string(obj, 'residue_name', where).upper(),
                       residue_index=_get_int(obj, 'residue_index', where),
                       chain_id=chain_id,
                       is_backbone=_get_bool(obj, 'is_backbone', where),
                       position=_get_xyz(obj, where))


def _parse_ligand_atom(obj, where):
    _check_keys(obj, _LIGAND_KEYS, where)
    hybridization = _get_string(obj, 'hybridization', where)
    if hybridization not in HYBRIDIZATIONS:
        raise ComplexSchemaError('%s.hybridization: unknown value %r' % (where, hybridization))
    degree = _get_int(obj, 'degree', where)
    return LigandAtom(element=normalize_element(_get_string(obj, 'element', where)),
                      hybridization=hybridization,
                      formal_charge=_get_int(obj, 'formal_charge', where),
                      degree=degree,
                      is_aromatic=_get_bool(obj, 'is_aromatic', where),
                      position=_get_xyz(obj, where))


def complex_from_json(obj):
    """Builds a validated Complex from an already-decoded interchange document."""
    _check_keys(obj, _COMPLEX_KEYS, 'complex')
    complex_id = _get_string(obj, 'id', 'complex')
    affinity = obj['affinity']
    if affinity is not None and not is_json_number(affinity):
        raise ComplexSchemaError('complex.affinity: expected a number or null')
    for key in ('protein', 'ligand'):
        if not isinstance(obj[key], list):
            raise ComplexSchemaError('complex.%s: expected an array' % (key, ))
        if not obj[key]:
            raise ComplexSchemaError('complex.%s: expected at least one atom' % (key, ))
    protein = [
        _parse_protein_atom(a, 'protein[%d]' % (i, )) for i, a in enumerate(obj['protein'])
    ]
    ligand = [_parse_ligand_atom(a, 'ligand[%d]' % (i, )) for i, a in enumerate(obj['ligand'])]
    return Complex(complex_id, protein, ligand, affinity)


def parse_complex(text):
    """Parses an interchange document.

    Raises ComplexSyntaxError for malformed JSON, ComplexSchemaError for missing or
    unknown fields and bad enum values, and ComplexValidationError for semantic
    violations such as duplicate coordinates.
    """
    try:
        obj = decode_json(text)
    except ValueError as e:
        raise ComplexSyntaxError('malformed complex document: %s' % (e, ))
    return complex_from_json(obj)


def load_complex(path):
    with open(path, 'r', encoding='utf-8') as f:
        try:
            text = f.read()
        except UnicodeDecodeError as e:
            raise ComplexSyntaxError('%s is not valid UTF-8: %s' % (path, e))
    return parse_complex(text)


def dump_complex(c):
    return encode_json(c.to_json(), indent=1) + '\n'


def save_complex(c, path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dump_complex(c))
