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
"""Run configuration: `{"model": {...}, "physics": {...}, "train": {...}}`."""

from .json_utils import decode_json, encode_json
from .json_wrappers import SOURCE_FLAG, ConfigError, JsonObjectWrapper, wrapped_property
from .physics import PhysicsConfig
from .training import TrainConfig
from .transformer import ModelConfig


class RunConfig(JsonObjectWrapper):
    __slots__ = ()

    model = wrapped_property('model', ModelConfig, default=ModelConfig)
    physics = wrapped_property('physics', PhysicsConfig, default=PhysicsConfig)
    train = wrapped_property('train', TrainConfig, default=TrainConfig)


def load_run_config(path=None):
    """Reads a config file; with no path, every field takes its default."""
    if path is None:
        return RunConfig()
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except IOError as e:
        raise ConfigError('cannot read config file %s: %s' % (path, e.strerror or e))
    try:
        obj = decode_json(text)
    except ValueError as e:
        raise ConfigError('%s: malformed JSON: %s' % (path, e))
    try:
        return RunConfig(obj)
    except ConfigError as e:
        raise ConfigError('%s: %s' % (path, e))


def parse_override(text):
    """Parses `section.key=value`; the value is JSON, or a bare string if not valid JSON."""
    key, sep, raw = text.partition('=')
    if not sep or not key:
        raise ConfigError('override must have the form section.key=value, but received: %r' %
                          (text, ))
    try:
        value = decode_json(raw)
    except ValueError:
        value = raw
    return key.strip(), value


def apply_overrides(run_config, overrides, source=SOURCE_FLAG):
    """Applies (dotted key, value) pairs in order."""
    for key, value in overrides:
        run_config.override(key, value, source)
    return run_config


def resolve_run_config(path=None, overrides=()):
    run_config = apply_overrides(load_run_config(path), overrides)
    return run_config.validate()


def dump_run_config(run_config):
    return encode_json(run_config.to_json(), indent=2) + '\n'


def format_provenance(run_config):
    return ''.join('%s\t%s\n' % (key, source)
                   for key, source in run_config.provenance().items())
