#!/usr/bin/env python
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
"""Command-line interface for training and applying binding-affinity models.

Commands:

  train             Train on a dataset directory and write a checkpoint.
  predict           Predict affinities of complex files.
  evaluate          Regression metrics of a checkpoint on a dataset directory.
  rank              Ranking power over clusters of complexes sharing a target.
  explain           Residues involved in the lowest-energy ligand-protein pairs.
  synth             Write a synthetic oracle-labeled dataset directory.
  check-invariance  Audit predictions under random rigid motions.
  grad-check        Finite-difference check of all gradients.
  ablate            Train and score the geometry / physics-loss ablations.

Exit status is 0 on success, 1 for configuration errors, 2 for data,
checkpoint and metric errors, and 3 for numerical failures.
"""

import argparse
import concurrent.futures
import logging
import math
import os
import sys

import pandas as pd

from .. import ablation
from .. import autodiff
from .. import checkpoint
from .. import cli
from .. import complex_model
from .. import gradient_suite
from .. import invariance
from .. import metrics
from .. import physics
from .. import synthetic
from .. import training
from ..json_wrappers import ConfigError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

CSV_FLOAT_FORMAT = '%.10g'


class CommandFailed(Exception):
    def __init__(self, message, exit_code):
        super(CommandFailed, self).__init__(message)
        self.exit_code = exit_code


def _write_frame(frame, path):
    if path is None:
        frame.to_csv(sys.stdout, index=False, float_format=CSV_FLOAT_FORMAT, na_rep='nan')
    else:
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep='nan')


def _write_text(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)


def _predict_all(model, complexes, jobs):
    """Predictions in input order."""
    if jobs <= 1 or len(complexes) <= 1:
        return [model.predict(c) for c in complexes]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(model.predict, complexes))


def _load_model(path):
    return checkpoint.load_checkpoint(path).to_model()


def run_train(args):
    run_config = cli.handle_config_arguments(args)
    if args.print_config:
        cli.print_config(run_config)
        return EXIT_OK
    if args.data is None or args.out is None:
        raise ConfigError('train requires --data and --out')
    dataset = synthetic.load_dataset(args.data)
    result = training.train(dataset, run_config.train, run_config.model, run_config.physics)
    checkpoint.save_checkpoint(result.checkpoint, args.out)
    history_path = args.history if args.history is not None else args.out + '.history.csv'
    training.write_history_csv(result.history, history_path)
    train_set = dataset.split('train')
    train_rmse = metrics.rmse([c.affinity for c in train_set],
                              _predict_all(result.model, train_set, 1))
    logger.info('Wrote %s (best epoch %d, train RMSE %.4f)', args.out,
                result.checkpoint.meta['epoch'], train_rmse)
    return EXIT_OK


def run_predict(args):
    model = _load_model(args.ckpt)
    complexes = []
    failed = 0
    for path in args.inputs:
        try:
            complexes.append(complex_model.load_complex(path))
        except (complex_model.ComplexFormatError, IOError) as e:
            failed += 1
            logger.error('%s: %s', path, e)
    predictions = _predict_all(model, complexes, args.jobs)
    frame = pd.DataFrame({
        'complex_id': [c.id for c in complexes],
        'predicted_pk': predictions
    },
                         columns=['complex_id', 'predicted_pk'])
    _write_frame(frame, args.out)
    if failed:
        raise CommandFailed('%d input file(s) could not be parsed' % (failed, ), EXIT_DATA)
    return EXIT_OK


def _dataset_complexes(dataset, split):
    if split == 'all':
        return list(dataset)
    return dataset.split(split)


def run_evaluate(args):
    model = _load_model(args.ckpt)
    complexes = _dataset_complexes(synthetic.load_dataset(args.data), args.split)
    predictions = _predict_all(model, complexes, args.jobs)
    report = metrics.metrics_report([c.affinity for c in complexes], predictions)
    _write_frame(metrics.report_frame(report), args.out)
    return EXIT_OK


def run_rank(args):
    model = _load_model(args.ckpt)
    memberships = synthetic.load_clusters(args.clusters)
    data_dir = args.data if args.data is not None else os.path.dirname(
        os.path.abspath(args.clusters))
    dataset = synthetic.load_dataset(data_dir)
    clusters = []
    for membership in memberships:
        try:
            members = [dataset.get(complex_id) for complex_id in membership.complex_ids]
        except KeyError as e:
            raise synthetic.DatasetError('cluster %r refers to unknown complex %s' %
                                         (membership.target_id, e),
                                         path=args.clusters)
        predictions = _predict_all(model, members, args.jobs)
        clusters.append(
            metrics.Cluster(membership.target_id,
                            [(c.id, c.affinity, p) for c, p in zip(members, predictions)]))
    frame = pd.DataFrame(
        {
            'metric': ['ranking_power_spearman', 'ranking_power_kendall', 'num_clusters'],
            'value': [
                metrics.ranking_power(clusters, 'spearman'),
                metrics.ranking_power(clusters, 'kendall'),
                len(clusters)
            ],
        },
        columns=['metric', 'value'])
    _write_frame(frame, args.out)
    return EXIT_OK


def run_explain(args):
    model = _load_model(args.ckpt)
    prepared = model.prepare(complex_model.load_complex(args.input))
    result = model.forward(prepared)
    report = physics.explain(result.interaction.pair_energies,
                             prepared.graph,
                             fraction=args.fraction)
    _write_text(physics.format_explain_report(report), args.out)
    return EXIT_OK


def _split_tags(ids, validation_fraction, test_fraction):
    n = len(ids)
    num_test = int(round(test_fraction * n))
    num_validation = int(round(validation_fraction * n))
    if num_test + num_validation > n:
        raise ConfigError('validation and test fractions exceed the dataset size')
    tags = {}
    for i, complex_id in enumerate(ids):
        if i >= n - num_test:
            tags[complex_id] = 'test'
        elif i >= n - num_test - num_validation:
            tags[complex_id] = 'validation'
        else:
            tags[complex_id] = 'train'
    return tags


def run_synth(args):
    if args.clusters:
        dataset, specs = synthetic.gen_synthetic_clusters(args.seed, args.clusters,
                                                          args.cluster_size)
    else:
        dataset = synthetic.gen_synthetic(args.seed,
                                          args.n,
                                          protein_size_range=tuple(args.protein_size),
                                          ligand_size_range=tuple(args.ligand_size),
                                          minima_fraction=args.minima_fraction)
        specs = None
    dataset = dataset.with_splits(
        _split_tags(dataset.ids, args.validation_fraction, args.test_fraction))
    synthetic.save_dataset(dataset, args.out)
    if specs is not None:
        synthetic.save_clusters(specs, os.path.join(args.out, synthetic.CLUSTERS_MANIFEST))
    logger.info('Wrote %d complexes to %s', len(dataset), args.out)
    return EXIT_OK


def run_check_invariance(args):
    model = _load_model(args.ckpt)
    complexes = _dataset_complexes(synthetic.load_dataset(args.data), args.split)
    rows = invariance.invariance_audit(model, complexes, n_transforms=args.transforms,
                                       seed=args.seed)
    _write_frame(invariance.audit_frame(rows), args.out)
    worst = max([row.max_abs_deviation for row in rows] or [0.0])
    if worst >= args.tolerance:
        raise CommandFailed('rigid-motion deviation %.3g exceeds %.3g' % (worst, args.tolerance),
                            EXIT_NUMERICAL)
    return EXIT_OK


def run_grad_check(args):
    if args.seed is not None:
        seeds = [args.seed]
    else:
        seeds = range(args.seeds)
    results = []
    for seed in seeds:
        results.extend(
            gradient_suite.check_primitives(seed, tol=args.tol, abs_floor=args.abs_floor))
        results.extend(
            gradient_suite.check_end_to_end(seed, tol=args.tol, abs_floor=args.abs_floor))
    failures = [r for r in results if not r.passed]
    for r in failures:
        logger.error('gradient check %s (seed %d) failed: max relative error %.3g', r.name,
                     r.seed, r.max_rel_error)
    worst = max(r.max_rel_error for r in results)
    sys.stdout.write('checks\t%d\nfailures\t%d\nmax_rel_error\t%.6g\n' %
                     (len(results), len(failures), worst))
    if failures:
        raise CommandFailed('%d gradient check(s) failed' % (len(failures), ), EXIT_NUMERICAL)
    return EXIT_OK


def run_ablate(args):
    run_config = cli.handle_config_arguments(args)
    if args.epochs is not None:
        run_config.train.max_epochs = args.epochs
    if args.print_config:
        cli.print_config(run_config)
        return EXIT_OK
    seed = run_config.train.seed
    dataset = synthetic.gen_synthetic(seed, args.n_train + args.n_test)
    dataset = dataset.with_splits(_split_tags(dataset.ids, 0.0,
                                              float(args.n_test) / (args.n_train + args.n_test)))
    reports = ablation.run_ablation(dataset, run_config)
    _write_frame(ablation.ablation_frame(reports), args.out)
    return EXIT_OK


def _positive_fraction(text):
    value = float(text)
    if not 0 < value <= 1 or math.isnan(value):
        raise argparse.ArgumentTypeError('expected a number in (0, 1], but received: %r' %
                                         (text, ))
    return value


def build_parser():
    ap = argparse.ArgumentParser(prog='spin-affinity',
                                 description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    cli.add_logging_arguments(ap)
    sub_aps = ap.add_subparsers(dest='command', help='command to run')
    sub_aps.required = True

    ap_train = sub_aps.add_parser('train', help='Train a model.')
    ap_train.set_defaults(func=run_train)
    ap_train.add_argument('--data', help='Dataset directory.')
    ap_train.add_argument('--out', help='Output checkpoint path.')
    ap_train.add_argument('--history',
                          help='Training history CSV path (default: <out>.history.csv).')
    cli.add_config_arguments(ap_train)

    ap_predict = sub_aps.add_parser('predict', help='Predict affinities.')
    ap_predict.set_defaults(func=run_predict)
    cli.add_checkpoint_arguments(ap_predict)
    ap_predict.add_argument('--in',
                            dest='inputs',
                            nargs='*',
                            default=[],
                            help='Complex interchange files.')
    ap_predict.add_argument('--out', help='Output CSV path (default: standard output).')
    cli.add_jobs_arguments(ap_predict)

    ap_evaluate = sub_aps.add_parser('evaluate', help='Compute regression metrics.')
    ap_evaluate.set_defaults(func=run_evaluate)
    cli.add_checkpoint_arguments(ap_evaluate)
    ap_evaluate.add_argument('--data', required=True, help='Dataset directory.')
    ap_evaluate.add_argument('--split',
                             choices=synthetic.SPLITS + ('all', ),
                             default='all',
                             help='Dataset split to evaluate.')
    ap_evaluate.add_argument('--out', help='Output CSV path (default: standard output).')
    cli.add_jobs_arguments(ap_evaluate)

    ap_rank = sub_aps.add_parser('rank', help='Compute ranking power.')
    ap_rank.set_defaults(func=run_rank)
    cli.add_checkpoint_arguments(ap_rank)
    ap_rank.add_argument('--clusters', required=True, help='Cluster manifest path.')
    ap_rank.add_argument('--data',
                         help='Directory of complex files (default: the manifest directory).')
    ap_rank.add_argument('--out', help='Output CSV path (default: standard output).')
    cli.add_jobs_arguments(ap_rank)

    ap_explain = sub_aps.add_parser('explain', help='Report strongest interacting residues.')
    ap_explain.set_defaults(func=run_explain)
    cli.add_checkpoint_arguments(ap_explain)
    ap_explain.add_argument('--in', dest='input', required=True, help='Complex file.')
    ap_explain.add_argument('--fraction',
                            type=_positive_fraction,
                            default=0.10,
                            help='Fraction of lowest-energy pairs to report.')
    ap_explain.add_argument('--out', help='Output path (default: standard output).')

    ap_synth = sub_aps.add_parser('synth', help='Generate a synthetic dataset.')
    ap_synth.set_defaults(func=run_synth)
    ap_synth.add_argument('--seed', type=int, default=0)
    ap_synth.add_argument('--n', type=int, default=8, help='Number of complexes.')
    ap_synth.add_argument('--out', required=True, help='Output dataset directory.')
    ap_synth.add_argument('--protein-size', type=int, nargs=2, default=[6, 16])
    ap_synth.add_argument('--ligand-size', type=int, nargs=2, default=[3, 8])
    ap_synth.add_argument('--minima-fraction', type=float, default=0.25)
    ap_synth.add_argument('--validation-fraction', type=float, default=0.0)
    ap_synth.add_argument('--test-fraction', type=float, default=0.0)
    ap_synth.add_argument('--clusters',
                          type=int,
                          default=0,
                          help='Generate this many target clusters instead of --n complexes.')
    ap_synth.add_argument('--cluster-size', type=int, default=4)

    ap_invariance = sub_aps.add_parser('check-invariance', help='Audit rigid-motion invariance.')
    ap_invariance.set_defaults(func=run_check_invariance)
    cli.add_checkpoint_arguments(ap_invariance)
    ap_invariance.add_argument('--data', required=True, help='Dataset directory.')
    ap_invariance.add_argument('--split', choices=synthetic.SPLITS + ('all', ), default='all')
    ap_invariance.add_argument('--transforms', type=int, default=32)
    ap_invariance.add_argument('--seed', type=int, default=0)
    ap_invariance.add_argument('--tolerance', type=float, default=1e-5)
    ap_invariance.add_argument('--out', help='Output CSV path (default: standard output).')

    ap_grad = sub_aps.add_parser('grad-check', help='Finite-difference gradient checks.')
    ap_grad.set_defaults(func=run_grad_check)
    ap_grad.add_argument('--seed', type=int, help='Run a single seed.')
    ap_grad.add_argument('--seeds', type=int, default=20, help='Run seeds 0 .. SEEDS-1.')
    ap_grad.add_argument('--tol', type=float, default=1e-4)
    ap_grad.add_argument('--abs-floor', type=float, default=1e-6)

    ap_ablate = sub_aps.add_parser('ablate', help='Train and score ablation variants.')
    ap_ablate.set_defaults(func=run_ablate)
    ap_ablate.add_argument('--n-train', type=int, default=64)
    ap_ablate.add_argument('--n-test', type=int, default=32)
    ap_ablate.add_argument('--epochs', type=int, help='Shorthand for --set train.max_epochs.')
    ap_ablate.add_argument('--out', help='Output CSV path (default: standard output).')
    cli.add_config_arguments(ap_ablate)
    return ap


def exit_code_for(e):
    if isinstance(e, CommandFailed):
        return e.exit_code
    if isinstance(e, ConfigError):
        return EXIT_CONFIG
    if isinstance(e, (training.NonFiniteLossError, autodiff.NonFiniteError,
                      physics.DistanceFloorError)):
        return EXIT_NUMERICAL
    if isinstance(e, (complex_model.ComplexFormatError, synthetic.DatasetError,
                      checkpoint.CheckpointError, metrics.UndefinedMetricError,
                      training.EmptyDatasetError, IOError)):
        return EXIT_DATA
    return None


def main(argv=None):
    args = build_parser().parse_args(argv)
    cli.handle_logging_arguments(args)
    try:
        return args.func(args)
    except Exception as e:
        code = exit_code_for(e)
        if code is None:
            raise
        if isinstance(e, training.NonFiniteLossError) and e.complex_id is not None:
            sys.stderr.write('error: numerical failure in complex %s: %s\n' % (e.complex_id, e))
        else:
            sys.stderr.write('error: %s\n' % (e, ))
        return code


if __name__ == '__main__':
    sys.exit(main())
