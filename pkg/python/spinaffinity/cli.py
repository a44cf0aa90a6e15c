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

import logging
import sys


def add_logging_arguments(ap):
    ap.add_argument('-v',
                    '--verbose',
                    action='store_true',
                    help='Log progress at INFO level to standard error.')


def handle_logging_arguments(args):
    logging.basicConfig(stream=sys.stderr,
                        level=logging.INFO if getattr(args, 'verbose', False) else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')


def add_config_arguments(ap):
    """Defines options for specifying a run configuration."""
    g = ap.add_argument_group(title='Configuration options')
    g.add_argument('--config', help='Path to a JSON run configuration file.')
    g.add_argument('--set',
                   action='append',
                   default=[],
                   metavar='SECTION.KEY=VALUE',
                   dest='overrides',
                   help='Override a configuration field; VALUE is parsed as JSON.  May repeat.')
    g.add_argument('--seed', type=int, help='Shorthand for --set train.seed=SEED.')
    g.add_argument('--print-config',
                   action='store_true',
                   help='Write the resolved configuration to standard output and exit.')


def handle_config_arguments(args):
    """Resolves the options defined by `add_config_arguments` into a RunConfig."""
    from . import config

    overrides = [config.parse_override(text) for text in args.overrides]
    if getattr(args, 'seed', None) is not None:
        overrides.append(('train.seed', args.seed))
    return config.resolve_run_config(args.config, overrides)


def print_config(run_config, out=None, err=None):
    from . import config

    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    out.write(config.dump_run_config(run_config))
    err.write(config.format_provenance(run_config))


def add_checkpoint_arguments(ap, required=True):
    ap.add_argument('--ckpt', required=required, help='Path to a model checkpoint.')


def add_jobs_arguments(ap):
    ap.add_argument('--jobs',
                    type=int,
                    default=1,
                    help='Number of threads used for per-complex inference.')
