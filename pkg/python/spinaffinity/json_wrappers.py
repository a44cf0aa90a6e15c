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
"""Facilities for converting JSON <-> typed configuration objects.

A configuration class declares its fields with `wrapped_property`.  Every field
has a JSON name, a converter that validates and normalizes the JSON value, and a
default.  Instances always hold a fully-resolved value for every field and
remember where each value came from ('default', 'file' or 'flag').
"""

import collections
import copy
import math
import numbers
import threading

import numpy as np
import six

from .json_utils import encode_json_for_repr, is_json_number

SOURCE_DEFAULT = 'default'
SOURCE_FILE = 'file'
SOURCE_FLAG = 'flag'


class ConfigError(ValueError):
    pass


def to_json(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    try:
        method = value.to_json
    except AttributeError:
        return value
    return method()


class wrapped_property(property):
    """Property backed by the `json_name` entry of the wrapper's JSON data."""

    def __init__(self, json_name, wrapped_type, default=None, doc=None):
        self.json_name = json_name
        self.converter = _normalize_converter(wrapped_type)
        self.default = default
        super(wrapped_property, self).__init__(
            fget=lambda obj: obj._get_wrapped(json_name),
            fset=lambda obj, value: obj._set_wrapped(json_name, value, SOURCE_FLAG),
            doc=doc)

    def convert(self, value, source):
        try:
            if isinstance(self.converter, type) and issubclass(self.converter, JsonObjectWrapper):
                return self.converter(value, _source=source)
            return self.converter(value)
        except ConfigError as e:
            raise ConfigError('%s.%s' % (self.json_name, e))
        except (TypeError, ValueError) as e:
            raise ConfigError('%s: invalid value %r (%s)' % (self.json_name, value, e))

    def make_default(self):
        if isinstance(self.default, type) and issubclass(self.default, JsonObjectWrapper):
            return self.default(_source=SOURCE_DEFAULT)
        if callable(self.default):
            return self.default()
        return copy.deepcopy(self.default)


_property_cache = {}


def _wrapped_properties(cls):
    props = _property_cache.get(cls)
    if props is None:
        props = collections.OrderedDict()
        for klass in reversed(cls.__mro__):
            for attr in six.itervalues(vars(klass)):
                if isinstance(attr, wrapped_property):
                    props[attr.json_name] = attr
        _property_cache[cls] = props
    return props


class JsonObjectWrapper(object):
    __slots__ = ('_json_data', '_provenance', '_lock')

    def __init__(self, json_data=None, _source=SOURCE_FILE, **kwargs):
        provenance = None
        if json_data is None:
            json_data = collections.OrderedDict()
        elif isinstance(json_data, type(self)):
            provenance = json_data._provenance.copy()
            json_data = json_data.to_json()
        elif not isinstance(json_data, dict):
            raise ConfigError('expected a JSON object for %s, but received: %r' %
                              (type(self).__name__, json_data))
        props = _wrapped_properties(type(self))
        unknown = [k for k in json_data if k not in props]
        if unknown:
            raise ConfigError('unknown key(s) for %s: %s' % (type(self).__name__, ', '.join(
                sorted(str(k) for k in unknown))))
        data = collections.OrderedDict()
        sources = collections.OrderedDict()
        for name, prop in six.iteritems(props):
            if name in json_data:
                data[name] = prop.convert(json_data[name], _source)
                sources[name] = _source
            else:
                data[name] = prop.make_default()
                sources[name] = SOURCE_DEFAULT
        if provenance is not None:
            sources.update(provenance)
        object.__setattr__(self, '_json_data', data)
        object.__setattr__(self, '_provenance', sources)
        object.__setattr__(self, '_lock', threading.RLock())
        for k in kwargs:
            setattr(self, k, kwargs[k])

    def __setattr__(self, name, value):
        if name not in _wrapped_properties(type(self)) and not hasattr(type(self), name):
            raise ConfigError('unknown field for %s: %s' % (type(self).__name__, name))
        object.__setattr__(self, name, value)

    def _get_wrapped(self, key):
        with self._lock:
            return self._json_data[key]

    def _set_wrapped(self, key, value, source):
        prop = _wrapped_properties(type(self))[key]
        value = prop.convert(to_json(value) if isinstance(value, JsonObjectWrapper) else value,
                             source)
        with self._lock:
            self._json_data[key] = value
            self._provenance[key] = source

    def to_json(self):
        with self._lock:
            r = collections.OrderedDict()
            for k, v in six.iteritems(self._json_data):
                r[k] = to_json(v)
            return r

    def provenance(self, prefix=''):
        """Returns an ordered map from dotted field name to value source."""
        result = collections.OrderedDict()
        for k, v in six.iteritems(self._json_data):
            if isinstance(v, JsonObjectWrapper):
                result.update(v.provenance(prefix + k + '.'))
            else:
                result[prefix + k] = self._provenance[k]
        return result

    def override(self, dotted_key, value, source=SOURCE_FLAG):
        """Sets a possibly nested field, e.g. `override('model.k', 4)`."""
        head, _, rest = dotted_key.partition('.')
        props = _wrapped_properties(type(self))
        if head not in props:
            raise ConfigError('unknown field for %s: %s' % (type(self).__name__, head))
        if rest:
            child = self._json_data[head]
            if not isinstance(child, JsonObjectWrapper):
                raise ConfigError('%s is not a configuration section' % (head, ))
            child.override(rest, value, source)
        else:
            self._set_wrapped(head, value, source)

    def validate(self):
        for v in six.itervalues(self._json_data):
            if isinstance(v, JsonObjectWrapper):
                v.validate()
        return self

    def _copy_provenance(self, other):
        object.__setattr__(self, '_provenance', other._provenance.copy())
        for k, v in six.iteritems(self._json_data):
            if isinstance(v, JsonObjectWrapper):
                v._copy_provenance(other._json_data[k])

    def __deepcopy__(self, memo):
        result = type(self)(copy.deepcopy(self.to_json(), memo))
        result._copy_provenance(self)
        return result

    def __eq__(self, other):
        return type(self) == type(other) and self.to_json() == other.to_json()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return u'%s(%s)' % (type(self).__name__, encode_json_for_repr(self.to_json()))


def _normalize_converter(wrapped_type):
    if wrapped_type is float:
        return real_number
    if wrapped_type is int:
        return integer
    if wrapped_type is bool:
        return boolean
    return wrapped_type


def real_number(value):
    if not is_json_number(value):
        raise TypeError('expected a number')
    value = float(value)
    if not math.isfinite(value):
        raise ValueError('expected a finite number')
    return value


def integer(value):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if is_json_number(value) and math.isfinite(value) and float(value) == int(value):
            return int(value)
        raise TypeError('expected an integer')
    return int(value)


def boolean(value):
    if not isinstance(value, bool):
        raise TypeError('expected true or false')
    return value


def text_type(value):
    if not isinstance(value, six.string_types):
        raise TypeError('expected a string')
    return six.text_type(value)


def one_of(*choices):
    def converter(value):
        if value not in choices:
            raise ValueError('expected one of %s' % (', '.join(repr(c) for c in choices), ))
        return value

    return converter


def optional(wrapper):
    wrapper = _normalize_converter(wrapper)

    def modified_wrapper(value):
        if value is None:
            return None
        return wrapper(value)

    return modified_wrapper


def typed_string_map(wrapped_type):
    wrapped_type = _normalize_converter(wrapped_type)

    def converter(value):
        if not isinstance(value, dict):
            raise TypeError('expected a JSON object')
        result = collections.OrderedDict()
        for k, v in six.iteritems(value):
            result[text_type(k)] = wrapped_type(v)
        return result

    return converter
