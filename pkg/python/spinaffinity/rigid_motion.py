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
"""Rigid motions of 3-d coordinates.

Quaternions are stored as [x, y, z, w].
"""

import collections
import math

import numpy as np

DEFAULT_TRANSLATION_RANGE = 100.0


def unit_quaternion():
    return np.array([0, 0, 0, 1], np.float64)


def random_unit_quaternion(rng):
    """Uniformly distributed rotation (Shoemake's subgroup algorithm)."""
    u1, u2, u3 = rng.uniform(0, 1, size=3)
    a = math.sqrt(1 - u1)
    b = math.sqrt(u1)
    return np.array([
        a * math.sin(2 * math.pi * u2),
        a * math.cos(2 * math.pi * u2),
        b * math.sin(2 * math.pi * u3),
        b * math.cos(2 * math.pi * u3),
    ])


def quaternion_to_matrix(q):
    """Proper rotation matrix (det = +1) of a quaternion; normalizes first."""
    q = np.asarray(q, dtype=np.float64)
    norm = np.linalg.norm(q)
    if norm == 0:
        raise ValueError('zero quaternion')
    x, y, z, w = q / norm
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


class RigidMotion(collections.namedtuple('RigidMotion', ['rotation', 'translation'])):
    """x -> R x + b."""

    __slots__ = ()

    @staticmethod
    def identity():
        return RigidMotion(np.eye(3), np.zeros(3))

    def apply(self, positions):
        return np.asarray(positions, dtype=np.float64).dot(self.rotation.T) + self.translation

    def apply_to_complex(self, c):
        return c.transformed(self.rotation, self.translation)


def random_rigid_motion(rng, translation_range=DEFAULT_TRANSLATION_RANGE):
    return RigidMotion(quaternion_to_matrix(random_unit_quaternion(rng)),
                       rng.uniform(-translation_range, translation_range, size=3))


def reflection(axis=0):
    """Improper orthogonal map flipping one coordinate axis (det = -1)."""
    m = np.eye(3)
    m[axis, axis] = -1
    return RigidMotion(m, np.zeros(3))
