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
"""Audit of prediction invariance under rigid motions.

Any object with a `predict(complex) -> float` method can be audited.
"""

import collections
import logging

import numpy as np
import pandas as pd

from . import rigid_motion

logger = logging.getLogger(__name__)

AuditRow = collections.namedtuple('AuditRow',
                                  ['complex_id', 'max_abs_deviation', 'reflection_deviation'])


def audit_complex(model, c, n_transforms, rng, translation_range=None):
    if translation_range is None:
        translation_range = rigid_motion.DEFAULT_TRANSLATION_RANGE
    reference = model.predict(c)
    deviation = 0.0
    for _ in range(n_transforms):
        motion = rigid_motion.random_rigid_motion(rng, translation_range)
        deviation = max(deviation, abs(model.predict(motion.apply_to_complex(c)) - reference))
    reflected = rigid_motion.reflection().apply_to_complex(c)
    return AuditRow(complex_id=c.id,
                    max_abs_deviation=float(deviation),
                    reflection_deviation=float(abs(model.predict(reflected) - reference)))


def invariance_audit(model, complexes, n_transforms=32, seed=0):
    """Returns one AuditRow per complex, in input order.

    `max_abs_deviation` covers proper rigid motions only; the reflection
    deviation is reported separately.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for c in complexes:
        row = audit_complex(model, c, n_transforms, rng)
        logger.info('%s: rigid deviation %.3g, reflection deviation %.3g', row.complex_id,
                    row.max_abs_deviation, row.reflection_deviation)
        rows.append(row)
    return rows


def audit_frame(rows):
    return pd.DataFrame([row._asdict() for row in rows], columns=list(AuditRow._fields))


def write_audit_csv(rows, path):
    audit_frame(rows).to_csv(path, index=False, float_format='%.10g')
