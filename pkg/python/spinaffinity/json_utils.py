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

import collections
import json
import numbers

import numpy as np


def json_encoder_default(obj):
    """JSON encoder function that handles some numpy types."""
    if isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError('Object of type %s is not JSON serializable' % (type(obj).__name__, ))


def _reject_constant(name):
    raise ValueError('non-finite JSON number %s is not allowed' % (name, ))


def decode_json(x):
    """Strict decode: object order is kept, NaN/Infinity literals are rejected."""
    return json.loads(x, object_pairs_hook=collections.OrderedDict, parse_constant=_reject_constant)


def encode_json(obj, indent=None):
    """Deterministic encoding; floats use Python's shortest round-trip repr."""
    return json.dumps(obj, default=json_encoder_default, indent=indent, allow_nan=False)


def encode_json_for_repr(obj):
    return json.dumps(obj, default=json_encoder_default)


def is_json_number(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)
