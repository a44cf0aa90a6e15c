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
"""Van der Waals radii table (element symbol -> radius in Angstrom)."""

import collections
import math
import os

import numpy as np
import six

from .complex_model import normalize_element
from .json_utils import decode_json, is_json_number

DEFAULT_TABLE_PATH = os.path.join(os.path.dirname(__file__), 'data', 'vdw_radii.json')

FALLBACK_KEY = 'other'


class VdwRadiiTable(object):
    __slots__ = ('_radii', )

    def __init__(self, radii):
        if not isinstance(radii, dict):
            raise ValueError('vdW radii table must be a JSON object')
        table = collections.OrderedDict()
        for element, radius in six.iteritems(radii):
            if not is_json_number(radius) or not math.isfinite(radius) or radius <= 0:
                raise ValueError('invalid vdW radius for %r: %r' % (element, radius))
            key = element if element == FALLBACK_KEY else normalize_element(element)
            table[key] = float(radius)
        if FALLBACK_KEY not in table:
            raise ValueError('vdW radii table requires an %r entry' % (FALLBACK_KEY, ))
        self._radii = table

    @staticmethod
    def load(path=None):
        if path is None:
            path = DEFAULT_TABLE_PATH
        with open(path, 'r', encoding='utf-8') as f:
            return VdwRadiiTable(decode_json(f.read()))

    def radius(self, element):
        r = self._radii.get(normalize_element(element))
        if r is None:
            r = self._radii[FALLBACK_KEY]
        return r

    def radius_sum(self, e1, e2):
        return self.radius(e1) + self.radius(e2)

    def pair_sums(self, ligand_elements, protein_elements):
        """Returns the M x N matrix u of radius sums."""
        lig = np.array([self.radius(e) for e in ligand_elements], dtype=np.float64)
        pro = np.array([self.radius(e) for e in protein_elements], dtype=np.float64)
        return lig[:, np.newaxis] + pro[np.newaxis, :]

    def to_json(self):
        return collections.OrderedDict(self._radii)

    def __eq__(self, other):
        return isinstance(other, VdwRadiiTable) and self._radii == other._radii

    def __repr__(self):
        return 'VdwRadiiTable(%r)' % (dict(self._radii), )


_default_table = None


def default_radii_table():
    global _default_table
    if _default_table is None:
        _default_table = VdwRadiiTable.load()
    return _default_table


def vdw_radius_sum(e1, e2, table=None):
    if table is None:
        table = default_radii_table()
    return table.radius_sum(e1, e2)
