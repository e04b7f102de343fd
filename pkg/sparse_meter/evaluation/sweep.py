"""Evaluation protocol and the privacy-utility trade-off sweep.

A release method (a trained releaser or a baseline) is evaluated by releasing the
train, validation and test splits, fitting a utility network and an attacker on the
released train split (validation for early stopping) and measuring the test split:
NE2 on consumption in watts, attacker balanced accuracy, released samples per day
and the KSG leakage between labels and releases.
"""
import logging
import math
import pathlib
from multiprocessing import Pool
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..baselines import UNIFORM_FACTORS, uniform_downsample, random_downsample
from ..common import spawn_seeds, format_float, atomic_write
from ..data import WindowedDataset, TRAIN, VALIDATION, TEST
from ..mechanism import ReleaseMode, ReleaseOutput, released_rate
from ..nets import ModelParams
from ..trainer import (
    TrainerConfig, TrainedSystem, AttackerConfig,
    UtilityFitConfig, train, train_attacker, fit_utility, predict_occupancy, reconstruct
)
from .ksg import leakage_estimate, DEFAULT_K
from .metrics import balanced_accuracy, ne2, mse

logger = logging.getLogger(__name__)

RESULTS_HEADER = (
    'lambda', 'ne2', 'balanced_accuracy', 'avg_samples_per_day', 'ksg_mi_nats',
    'achieved_mse', 'mode', 'seed'
)
STATUS_COLUMN = 'status'
RANDOM_TEST_REPEATS = 5

ReleaseFn = Callable[[str, WindowedDataset, int], ReleaseOutput]


class TradeoffPoint(BaseModel):
    """One evaluated release method."""
    model_config = ConfigDict(extra='forbid')

    lam: Optional[float] = Field(None, description='Trade-off weight. None for '
                                 'baselines.')

    ne2: float = Field(math.nan, description='Normalized reconstruction error.')

    balanced_accuracy: float = Field(math.nan, description='Attacker balanced '
                                     'accuracy on the test split.')

    samples_per_day: float = Field(math.nan, description='Average released samples '
                                   'per sequence.')

    ksg_mi_nats: float = Field(math.nan, description='KSG leakage estimate in nats.')

    achieved_mse: float = Field(math.nan, description='Per-step reconstruction MSE '
                                'in standardized units.')

    mode: str = Field(..., description='smart, smart-multiplicative, additive, uniform '
                      'or random.')

    seed: int = Field(..., description='Seed of the run.')

    status: str = Field('ok', description='ok, or failed with a reason.')

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    def row(self) -> List[str]:
        values = (self.lam, self.ne2, self.balanced_accuracy, self.samples_per_day,
                  self.ksg_mi_nats, self.achieved_mse)
        return [format_float(v) for v in values] + [self.mode, str(self.seed),
                                                    self.status]


class EvaluationConfig(BaseModel):
    """Settings of the post-hoc evaluation of a release method."""
    model_config = ConfigDict(extra='forbid')

    attacker: AttackerConfig = Field(default_factory=AttackerConfig)

    utility: UtilityFitConfig = Field(default_factory=UtilityFitConfig)

    release_mode: Optional[ReleaseMode] = Field(
        None, description='Test-time release of trained systems. Defaults to the '
        'training mode (hard for smart, multiplicative for smart-multiplicative).'
    )

    ksg_k: int = Field(DEFAULT_K, ge=1, description='KSG neighbor count.')

    ksg_method: str = Field('brute', description='brute or tree neighbor search.')

    random_repeats: int = Field(RANDOM_TEST_REPEATS, ge=1, description='Random test '
                                'releases averaged for the random baseline.')


def _splits(data: WindowedDataset) -> Dict[str, WindowedDataset]:
    if not data.normalized or data.tags is None:
        raise ValueError('Evaluation needs a split and normalized dataset.')
    return {tag: data.subset(tag) for tag in (TRAIN, VALIDATION, TEST)}


def fit_and_score(data: WindowedDataset, release_fn: ReleaseFn,
                  config: EvaluationConfig, seed: int, mode: str,
                  lam: Optional[float] = None, additive: bool = False,
                  utility_init=None, test_repeats: int = 1
                  ) -> Tuple[TradeoffPoint, ModelParams]:
    """Fit the utility network and attacker on released data and score the test split.

    Args:
        data: Split and normalized dataset.
        release_fn: ``release_fn(split, dataset, repeat)`` returns the release of a
            split. Train and validation use repeat 0.
        config: Evaluation settings.
        seed: Seed of the utility and attacker fits.
        mode: Method name reported in the result.
        lam: Trade-off weight reported in the result.
        additive: The release itself is the reconstruction; no utility fit.
        utility_init: Utility parameters to fine-tune.
        test_repeats: Number of test releases the metrics are averaged over.

    Returns:
        Tuple[TradeoffPoint, ModelParams] -- the scores and the fitted attacker.
    """
    splits = _splits(data)
    stats = data.stats
    train_release = release_fn(TRAIN, splits[TRAIN], 0)
    validation_release = release_fn(VALIDATION, splits[VALIDATION], 0)
    fit_seed, attack_seed = spawn_seeds(seed, 2)

    utility = None
    if not additive:
        utility = fit_utility(
            train_release.z_values, splits[TRAIN].y,
            config.utility.model_copy(update={'seed': fit_seed % 2 ** 32}),
            validation_release.z_values, splits[VALIDATION].y, init=utility_init
        )
    attacker = train_attacker(
        train_release.z_values, splits[TRAIN].x,
        config.attacker.model_copy(update={'seed': attack_seed % 2 ** 32}),
        validation_release.z_values, splits[VALIDATION].x
    )

    test = splits[TEST]
    metrics = []
    for repeat in range(test_repeats):
        release = release_fn(TEST, test, repeat)
        z = release.z_values
        y_hat = z if additive else reconstruct(utility, z)
        metrics.append((
            ne2(stats.invert(test.y), stats.invert(y_hat)),
            balanced_accuracy(predict_occupancy(attacker, z), test.x),
            released_rate(release.mask_values),
            leakage_estimate(test.x, z, k=config.ksg_k, seed=seed,
                             method=config.ksg_method),
            mse(test.y, y_hat)
        ))
    mean = np.mean(np.array(metrics), axis=0)
    point = TradeoffPoint(
        lam=lam, ne2=mean[0], balanced_accuracy=mean[1], samples_per_day=mean[2],
        ksg_mi_nats=mean[3], achieved_mse=mean[4], mode=mode, seed=seed
    )
    return point, attacker


def evaluate_release(data: WindowedDataset, release_fn: ReleaseFn,
                     config: EvaluationConfig, seed: int, mode: str,
                     **kwargs) -> TradeoffPoint:
    """Scores of ``fit_and_score`` without the fitted attacker."""
    return fit_and_score(data, release_fn, config, seed, mode, **kwargs)[0]


def _split_seeds(seed: int) -> Dict[str, int]:
    return dict(zip((TRAIN, VALIDATION, TEST), spawn_seeds(seed, 3)))


def system_release_fn(system: TrainedSystem, seed: int,
                      mode: Optional[ReleaseMode] = None) -> ReleaseFn:
    """Release function of a trained system with fixed per-split noise seeds."""
    seeds = _split_seeds(seed)

    def release(split: str, dataset: WindowedDataset, repeat: int) -> ReleaseOutput:
        return system.release(dataset.y, dataset.x, seeds[split] + repeat, mode=mode)
    return release


def evaluate_system(data: WindowedDataset, system: TrainedSystem,
                    config: EvaluationConfig, seed: int) -> TradeoffPoint:
    """Evaluate a trained releaser and keep the fitted attacker on ``system``.

    The utility network is fine-tuned on a copy, ``system.utility`` is unchanged.
    """
    mode = config.release_mode
    repeats = config.random_repeats if mode == ReleaseMode.stochastic else 1
    point, system.attacker = fit_and_score(
        data, system_release_fn(system, seed, mode), config, seed,
        mode=system.config.mode.value, lam=system.config.lam,
        additive=system.config.mode.additive, utility_init=system.utility,
        test_repeats=repeats
    )
    return point


def evaluate_uniform(data: WindowedDataset, d: int, config: EvaluationConfig,
                     seed: int) -> TradeoffPoint:
    def release(split: str, dataset: WindowedDataset, repeat: int) -> ReleaseOutput:
        return uniform_downsample(dataset.y, d)
    return evaluate_release(data, release, config, seed, mode='uniform')


def evaluate_random(data: WindowedDataset, rate: float, config: EvaluationConfig,
                    seed: int) -> TradeoffPoint:
    """Random down-sampling. Test metrics are averaged over ``random_repeats`` draws."""
    seeds = _split_seeds(seed)

    def release(split: str, dataset: WindowedDataset, repeat: int) -> ReleaseOutput:
        rng = np.random.default_rng([seeds[split], repeat])
        return random_downsample(dataset.y, rate, rng)
    return evaluate_release(data, release, config, seed, mode='random',
                            test_repeats=config.random_repeats)


def _failed(mode: str, seed: int, lam: Optional[float], error: Exception) -> TradeoffPoint:
    logger.warning('%s point (lambda=%s, seed=%d) failed: %s', mode, lam, seed, error)
    reason = str(error) or type(error).__name__
    reason = reason.replace(',', ';').replace('\n', ' ')
    return TradeoffPoint(lam=lam, mode=mode, seed=seed, status=f'failed: {reason}')


# sweep tasks are plain tuples so they can be sent to worker processes
_Task = Tuple


def _run_task(task: _Task) -> TradeoffPoint:
    kind, data, config, seed = task[:4]
    try:
        if kind == 'smart':
            trainer_config, checkpoint_dir = task[4], task[5]
            splits = _splits(data)
            system = train(splits[TRAIN], trainer_config, splits[VALIDATION])
            point = evaluate_system(data, system, config, seed)
            if checkpoint_dir is not None:
                from ..checkpoint import save_system
                name = f'lambda_{format_float(trainer_config.lam)}_seed_{seed}.sppr'
                save_system(pathlib.Path(checkpoint_dir, name), system)
            return point
        if kind == 'uniform':
            return evaluate_uniform(data, task[4], config, seed)
        return evaluate_random(data, task[4], config, seed)
    except Exception as error:  # one failed point must not stop the sweep
        lam = task[4].lam if kind == 'smart' else None
        return _failed(kind if kind != 'smart' else task[4].mode.value, seed, lam, error)


def _run_all(tasks: List[_Task], jobs: int) -> List[TradeoffPoint]:
    if jobs > 1 and len(tasks) > 1:
        with Pool(min(jobs, len(tasks))) as pool:
            return pool.map(_run_task, tasks)
    return [_run_task(task) for task in tasks]


def tradeoff_sweep(data: WindowedDataset, lambdas: Sequence[float],
                   trainer_config: TrainerConfig, config: EvaluationConfig = None,
                   seeds: Sequence[int] = (0,), baselines: Sequence[str] = (),
                   uniform_factors: Sequence[int] = UNIFORM_FACTORS,
                   random_rates: Optional[Sequence[float]] = None,
                   match_random_rates: bool = False, jobs: int = 1,
                   checkpoint_dir: Union[str, pathlib.Path, None] = None
                   ) -> List[TradeoffPoint]:
    """Evaluate the learned releaser for every (lambda, seed) and the baselines.

    Args:
        data: Split and normalized dataset.
        lambdas: Trade-off weights of the learned releaser.
        trainer_config: Base trainer configuration. ``lam`` and ``seed`` are
            replaced per point.
        config: Evaluation settings.
        seeds: Seeds. Every method is evaluated once per seed.
        baselines: Any of ``uniform`` and ``random``.
        uniform_factors: Decimation factors of the uniform baseline.
        random_rates: Release rates of the random baseline. Defaults to the rates of
            the uniform baseline.
        match_random_rates: Also evaluate random down-sampling at the measured rate
            of every successful learned point.
        jobs: Number of worker processes.
        checkpoint_dir: Folder for one checkpoint per learned point.

    Returns:
        List[TradeoffPoint] -- learned points first (lambda-major), then uniform,
        random and matched random points.
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise ValueError('The lambda list cannot be empty.')
    unknown = set(baselines) - {'uniform', 'random'}
    if unknown:
        raise ValueError(f'Unknown baselines {sorted(unknown)}. Use uniform or random.')
    config = config or EvaluationConfig()
    steps = data.steps
    factors = [d for d in uniform_factors if steps % d == 0]
    if random_rates is None:
        random_rates = [1.0 / d for d in factors]
    checkpoint_dir = None if checkpoint_dir is None else str(checkpoint_dir)

    tasks: List[_Task] = []
    for lam in lambdas:
        for seed in seeds:
            point_config = trainer_config.model_copy(update={'lam': lam, 'seed': seed})
            tasks.append(('smart', data, config, seed, point_config, checkpoint_dir))
    if 'uniform' in baselines:
        tasks.extend(('uniform', data, config, seed, d) for d in factors for seed in seeds)
    if 'random' in baselines:
        tasks.extend(('random', data, config, seed, r) for r in random_rates
                     for seed in seeds)
    points = _run_all(tasks, jobs)

    if match_random_rates:
        matched = [
            ('random', data, config, p.seed, p.samples_per_day / steps)
            for p in points[:len(lambdas) * len(seeds)]
            if p.ok and p.samples_per_day > 0
        ]
        points.extend(_run_all(matched, jobs))
    return points


def write_results(points: Sequence[TradeoffPoint],
                  path: Union[str, pathlib.Path]) -> pathlib.Path:
    """Write result rows with the results header and a trailing status column."""
    lines = [','.join(RESULTS_HEADER + (STATUS_COLUMN,))]
    lines.extend(','.join(p.row()) for p in points)
    return atomic_write(path, '\n'.join(lines) + '\n')


def write_plot_data(points: Sequence[TradeoffPoint],
                    folder: Union[str, pathlib.Path]) -> List[pathlib.Path]:
    """Write ``plotdata_{tradeoff,rate,mi}.csv`` for external plotting.

    Each file has one row per successful point: the x value, the y value, the
    method and lambda. Rows are sorted by method and x value.
    """
    folder = pathlib.Path(folder)
    frame = pd.DataFrame([p.model_dump() for p in points if p.ok])
    if frame.empty:
        frame = pd.DataFrame(columns=list(TradeoffPoint.model_fields))
    frame = frame.rename(columns={'lam': 'lambda'})
    plots = {
        'tradeoff': ('ne2', 'balanced_accuracy'),
        'rate': ('samples_per_day', 'ne2'),
        'mi': ('ne2', 'ksg_mi_nats')
    }
    written = []
    for name, (x, y) in plots.items():
        table = frame[[x, y, 'mode', 'lambda', 'seed']].sort_values(
            ['mode', x], kind='stable'
        )
        path = folder / f'plotdata_{name}.csv'
        written.append(atomic_write(path, table.to_csv(index=False, lineterminator='\n')))
    return written
