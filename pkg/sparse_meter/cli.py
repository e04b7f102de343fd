"""sparse-meter command line interface."""
import contextlib
import logging
import pathlib
import sys

import click
import numpy as np
from click.core import ParameterSource
from click.exceptions import ClickException

from .baselines import uniform_downsample, random_downsample
from .checkpoint import save_system, load_system
from .common import parse_float_list, atomic_write
from .config import RunConfig, build_run_config, load_config_file
from .data import prepare_dataset, synthesize_series, write_csv, TRAIN, VALIDATION, TEST
from .evaluation.ksg import leakage_estimate, METHODS
from .evaluation.sweep import (
    tradeoff_sweep, evaluate_system, evaluate_uniform, evaluate_random, write_results,
    write_plot_data
)
from .mechanism import ReleaseMode
from .trainer import TrainingDivergedError, TrainingMode, train as train_system

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = 'checkpoint.sppr'
HISTORY_FILE = 'history.csv'
RESULTS_FILE = 'results.csv'
METRICS_FILE = 'metrics.json'

_TEST_MODES = [m.value for m in (ReleaseMode.hard, ReleaseMode.multiplicative,
                                 ReleaseMode.stochastic)]


class DivergenceError(ClickException):
    exit_code = 2


class SparseMeterGroup(click.Group):
    """Command group that reports usage errors with exit code 1."""

    def main(self, *args, **kwargs):
        kwargs.pop('standalone_mode', None)
        try:
            result = super().main(*args, standalone_mode=False, **kwargs)
        except click.UsageError as error:
            error.show()
            sys.exit(1)
        except ClickException as error:
            error.show()
            sys.exit(error.exit_code)
        except click.Abort:
            click.echo('Aborted!', err=True)
            sys.exit(1)
        sys.exit(result if isinstance(result, int) else 0)


@contextlib.contextmanager
def _errors():
    """Turn library errors into command line errors."""
    try:
        yield
    except TrainingDivergedError as error:
        raise DivergenceError(str(error))
    except (ValueError, OSError, RuntimeError) as error:
        raise ClickException(str(error))


def _default(name):
    return RunConfig.model_fields[name].default


def _shared_options(func):
    options = [
        click.option('--data', help='synth for the synthetic generator, a meter CSV or '
                     'a folder of meter CSVs.', default=_default('data'),
                     show_default=True),
        click.option('--out', type=click.Path(file_okay=False), help='Output folder.',
                     default=_default('out'), show_default=True),
        click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), help='Seed of the '
                     'data split, initialization and noise.', default=_default('seed'),
                     show_default=True),
        click.option('--config', 'config_file', type=click.Path(exists=True,
                     dir_okay=False), help='Flat key = value config file. Flags given '
                     'on the command line win over its values.'),
        click.option('--n-days', type=click.IntRange(min=20), help='Days generated '
                     'when data is synth.', default=_default('n_days'),
                     show_default=True)
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _trainer_options(func):
    options = [
        click.option('--iterations', type=click.IntRange(min=1), help='Maximum outer '
                     'iterations.', default=_default('iterations'), show_default=True),
        click.option('--batch-size', type=click.IntRange(min=1), help='Minibatch size '
                     'B.', default=_default('batch_size'), show_default=True),
        click.option('--adversary-steps', type=click.IntRange(min=1), help='Adversary '
                     'updates k per iteration.', default=_default('adversary_steps'),
                     show_default=True),
        click.option('--noise-dim', type=click.IntRange(min=1), help='Seed noise '
                     'dimension m.', default=_default('noise_dim'), show_default=True),
        click.option('--beta', type=float, help='Ridge weight on the releaser.',
                     default=_default('beta'), show_default=True),
        click.option('--lr', type=float, help='RMSprop learning rate.',
                     default=_default('lr'), show_default=True),
        click.option('--tau', type=click.FloatRange(0, 1), help='Release threshold.',
                     default=_default('tau'), show_default=True),
        click.option('--mode', type=click.Choice([m.value for m in TrainingMode]),
                     help='Releaser kind.', default=_default('mode').value,
                     show_default=True),
        click.option('--width-scale', type=float, help='Multiplier of the cells per '
                     'layer of every network.', default=_default('width_scale'),
                     show_default=True),
        click.option('--select-tau/--fixed-tau', help='Pick tau on the validation '
                     'split after training.', default=_default('select_tau'),
                     show_default=True),
        click.option('--early-stopping/--no-early-stopping', help='Stop on a '
                     'validation plateau.', default=_default('early_stopping'),
                     show_default=True)
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _eval_options(func):
    options = [
        click.option('--attacker-iterations', type=click.IntRange(min=1),
                     help='Attacker updates.', default=_default('attacker_iterations'),
                     show_default=True),
        click.option('--utility-iterations', type=click.IntRange(min=1),
                     help='Post-hoc utility updates.',
                     default=_default('utility_iterations'), show_default=True)
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _explicit(ctx: click.Context, params: dict) -> dict:
    sources = (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)
    return {k: v for k, v in params.items() if ctx.get_parameter_source(k) in sources}


def _run_config(ctx: click.Context, config_file, **params) -> RunConfig:
    """Flags given on the command line, then the config file, then the defaults."""
    with _errors():
        file_values = load_config_file(config_file) if config_file else {}
        return build_run_config(file_values, _explicit(ctx, params))


def _dataset(config: RunConfig):
    return prepare_dataset(config.data, config.seed, config.n_days,
                           config.utc_offset_s, config.per_household)


def _echo_point(point) -> None:
    for key, value in point.model_dump().items():
        click.echo(f'{key}: {value}')


@click.group(cls=SparseMeterGroup)
@click.version_option()
@click.option('-v', '--verbose', count=True, help='Log progress. Repeat for debug '
              'output.')
def main(verbose):
    """Privacy-preserving release of smart meter data by learned down-sampling."""
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG if verbose > 1 else logging.INFO,
            format='%(asctime)s %(name)s %(levelname)s: %(message)s'
        )


@main.command('train')
@_shared_options
@click.option('--lambda', 'lam', type=click.FloatRange(min=0), help='Privacy-utility '
              'trade-off weight.', default=_default('lam'), show_default=True)
@_trainer_options
@click.pass_context
def train(ctx, config_file, **params):
    """Train a releaser and write its checkpoint and training history."""
    config = _run_config(ctx, config_file, **params)
    with _errors():
        dataset = _dataset(config)
        system = train_system(dataset.subset(TRAIN), config.trainer_config(),
                              dataset.subset(VALIDATION))
        out = pathlib.Path(config.out)
        checkpoint = save_system(out / CHECKPOINT_FILE, system)
        system.write_history(out / HISTORY_FILE)
        config.write(out)
    last = system.history[-1]
    click.echo(f'L_U: {last.utility!r}')
    click.echo(f'L_A: {last.adversary!r}')
    click.echo(f'entropy_sum: {last.entropy_sum!r}')
    click.echo(f'Checkpoint: {checkpoint}', err=True)


@main.command('sweep')
@_shared_options
@click.option('--lambdas', help='Comma-separated trade-off weights.',
              default=','.join(repr(v) for v in _default('lambdas')), show_default=True)
@click.option('--seeds', help='Comma-separated seeds. Every point runs once per seed.',
              default=','.join(str(v) for v in _default('seeds')), show_default=True)
@click.option('--baselines', help='Comma-separated baselines to add: uniform, random.',
              default='', show_default=True)
@click.option('--match-random-rates/--no-match-random-rates', help='Add random '
              'down-sampling at the rate of every learned point.',
              default=_default('match_random_rates'), show_default=True)
@click.option('--jobs', type=click.IntRange(min=1), help='Worker processes.',
              default=_default('jobs'), show_default=True)
@click.option('--save-checkpoints', is_flag=True, help='Write one checkpoint per '
              'learned point under the checkpoints folder.')
@_trainer_options
@_eval_options
@click.pass_context
def sweep(ctx, config_file, save_checkpoints, **params):
    """Evaluate the privacy-utility trade-off over lambdas, seeds and baselines."""
    with _errors():
        explicit = _explicit(ctx, params)
        if 'lambdas' in explicit:
            params['lambdas'] = parse_float_list(params['lambdas'])
        if 'seeds' in explicit:
            params['seeds'] = [int(v) for v in parse_float_list(params['seeds'])]
        if 'baselines' in explicit:
            params['baselines'] = [b.strip() for b in params['baselines'].split(',')
                                   if b.strip()]
    config = _run_config(ctx, config_file, **params)
    out = pathlib.Path(config.out)
    with _errors():
        dataset = _dataset(config)
        points = tradeoff_sweep(
            dataset, config.lambdas, config.trainer_config(),
            config.evaluation_config(), seeds=config.seeds,
            baselines=config.baselines, uniform_factors=config.uniform_factors,
            random_rates=config.random_rates,
            match_random_rates=config.match_random_rates, jobs=config.jobs,
            checkpoint_dir=out / 'checkpoints' if save_checkpoints else None
        )
        results = write_results(points, out / RESULTS_FILE)
        write_plot_data(points, out)
        config.write(out)
    failed = [p for p in points if not p.ok]
    click.echo(f'{len(points) - len(failed)} of {len(points)} points succeeded.',
               err=True)
    if len(failed) == len(points):
        raise ClickException(f'Every point failed. See {results}.')
    click.echo(results)


@main.command('eval')
@click.argument('checkpoint', type=click.Path(exists=True, dir_okay=False))
@_shared_options
@click.option('--mode', 'release_mode', type=click.Choice(_TEST_MODES),
              help='Test-time release. Defaults to the training mode release.')
@click.option('--tau', type=click.FloatRange(0, 1), help='Release threshold. Defaults '
              'to the threshold saved with the checkpoint.')
@_eval_options
@click.pass_context
def evaluate(ctx, checkpoint, config_file, tau, **params):
    """Evaluate a trained releaser on the test split.

    Writes the metrics and a copy of the checkpoint that includes the fitted
    attacker to the output folder.

    Masks act on standardized consumption, so a suppressed hour of a release reads
    as the train mean in watts, not 0 W.

    \b
    Args:
        checkpoint: Checkpoint written by train or sweep.

    """
    config = _run_config(ctx, config_file, **params)
    with _errors():
        trainer_config = config.trainer_config() if config_file else None
        system = load_system(checkpoint, trainer_config, tau)
        point = evaluate_system(_dataset(config), system, config.evaluation_config(),
                                config.seed)
        out = pathlib.Path(config.out)
        atomic_write(out / METRICS_FILE, point.model_dump_json(indent=2) + '\n')
        save_system(out / CHECKPOINT_FILE, system)
    _echo_point(point)


@main.command('baseline')
@_shared_options
@click.option('--kind', type=click.Choice(['uniform', 'random']), required=True,
              help='Baseline kind.')
@click.option('--d', 'factor', type=click.IntRange(min=1), default=2,
              show_default=True, help='Decimation factor of the uniform baseline.')
@click.option('--rate', type=click.FloatRange(0, 1, min_open=True), default=0.5,
              show_default=True, help='Release rate of the random baseline.')
@_eval_options
@click.pass_context
def baseline(ctx, config_file, kind, factor, rate, **params):
    """Evaluate one uniform or random down-sampling configuration.

    Masks act on standardized consumption, so a suppressed hour of a release reads
    as the train mean in watts, not 0 W.
    """
    config = _run_config(ctx, config_file, **params)
    with _errors():
        dataset = _dataset(config)
        settings = config.evaluation_config()
        if kind == 'uniform':
            point = evaluate_uniform(dataset, factor, settings, config.seed)
        else:
            point = evaluate_random(dataset, rate, settings, config.seed)
        atomic_write(pathlib.Path(config.out, METRICS_FILE),
                     point.model_dump_json(indent=2) + '\n')
    _echo_point(point)


@main.command('mi')
@_shared_options
@click.option('--source', type=click.Choice(['raw', 'uniform', 'random', 'checkpoint']),
              default='raw', show_default=True, help='Release whose leakage is '
              'estimated.')
@click.option('--checkpoint', type=click.Path(exists=True, dir_okay=False),
              help='Checkpoint for the checkpoint source.')
@click.option('--d', 'factor', type=click.IntRange(min=1), default=2,
              show_default=True, help='Decimation factor of the uniform source.')
@click.option('--rate', type=click.FloatRange(0, 1, min_open=True), default=0.5,
              show_default=True, help='Release rate of the random source.')
@click.option('-k', 'ksg_k', type=click.IntRange(min=1), default=_default('ksg_k'),
              show_default=True, help='KSG neighbor count.')
@click.option('--method', 'ksg_method', type=click.Choice(METHODS),
              default=_default('ksg_method'), show_default=True,
              help='Neighbor search.')
@click.pass_context
def mutual_information(ctx, config_file, source, checkpoint, factor, rate, **params):
    """Estimate the KSG leakage between occupancy and a release on the test split."""
    config = _run_config(ctx, config_file, **params)
    if source == 'checkpoint' and checkpoint is None:
        raise click.UsageError('--checkpoint is required for the checkpoint source.')
    with _errors():
        test = _dataset(config).subset(TEST)
        if source == 'raw':
            z = test.y
        elif source == 'uniform':
            z = uniform_downsample(test.y, factor).z_values
        elif source == 'random':
            rng = np.random.default_rng(config.seed)
            z = random_downsample(test.y, rate, rng).z_values
        else:
            system = load_system(checkpoint)
            z = system.release(test.y, test.x, config.seed).z_values
        value = leakage_estimate(test.x, z, k=config.ksg_k, seed=config.seed,
                                 method=config.ksg_method)
    click.echo(f'ksg_mi_nats: {value!r}')


@main.command('synth-data')
@click.option('--n-days', type=int, default=_default('n_days'), show_default=True,
              help='Number of days. At least 20.')
@click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=0,
              show_default=True, help='Generator seed.')
@click.option('--out', type=click.Path(dir_okay=False), required=True,
              help='Path of the CSV file.')
def synth_data(n_days, seed, out):
    """Write a synthetic meter CSV in the ingestion format."""
    with _errors():
        path = write_csv(synthesize_series(n_days, seed), out)
    click.echo(path)
