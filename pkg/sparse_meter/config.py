"""Run configuration of the command line and its flat config-file format.

A config file holds one ``key = value`` pair per line. ``#`` starts a comment. Values
are read as YAML scalars or flow lists so ``0.5``, ``true`` and ``[0, 0.5, 1]`` get
their natural types. Keys are RunConfig field names; dashes may replace underscores
and ``lambda`` is accepted for ``lam``.
"""
import pathlib
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import Field, field_validator

from .baselines import UNIFORM_FACTORS
from .common import atomic_write
from .evaluation.ksg import DEFAULT_K, METHODS
from .evaluation.sweep import EvaluationConfig
from .mechanism import ReleaseMode
from .trainer import TrainerConfig, AttackerConfig, UtilityFitConfig

RUN_FILE = 'run.yaml'
_ALIASES = {'lambda': 'lam'}


class RunConfig(TrainerConfig):
    """Trainer settings plus data, sweep, baseline and evaluation settings."""

    data: str = Field('synth', description='synth, a meter CSV or a folder of CSVs.')

    n_days: int = Field(365, ge=20, description='Days generated when data is synth.')

    utc_offset_s: int = Field(0, description='Local time offset used to cut days. '
                              'Floored to whole hours.')

    per_household: bool = Field(False, description='Split each household '
                                'separately.')

    out: str = Field('results', description='Output folder.')

    lambdas: List[float] = Field([0.0, 0.5, 1.0, 2.0, 5.0], description='Trade-off '
                                 'weights of a sweep.')

    seeds: List[int] = Field([0], description='Seeds of a sweep.')

    baselines: List[str] = Field([], description='Baselines added to a sweep: uniform, '
                                 'random.')

    uniform_factors: List[int] = Field(list(UNIFORM_FACTORS), description='Decimation '
                                       'factors of the uniform baseline.')

    random_rates: Optional[List[float]] = Field(None, description='Rates of the random '
                                                'baseline. Defaults to 1 / d for the '
                                                'uniform factors.')

    match_random_rates: bool = Field(False, description='Add random points at the rate '
                                     'of every learned point.')

    jobs: int = Field(1, ge=1, description='Worker processes of a sweep.')

    release_mode: Optional[ReleaseMode] = Field(None, description='Test-time release: '
                                                'hard, multiplicative or stochastic.')

    random_repeats: int = Field(5, ge=1, description='Random test releases averaged '
                                'for the random baseline.')

    ksg_k: int = Field(DEFAULT_K, ge=1, description='KSG neighbor count.')

    ksg_method: str = Field('brute', description='KSG neighbor search: brute or tree.')

    attacker_iterations: int = Field(1500, ge=1, description='Attacker updates.')

    utility_iterations: int = Field(1500, ge=1, description='Post-hoc utility updates.')

    @field_validator('lambdas')
    @classmethod
    def check_lambdas(cls, v):
        if not v:
            raise ValueError('lambdas cannot be empty.')
        if any(lam < 0 for lam in v):
            raise ValueError(f'lambdas must be non-negative: {v}')
        return v

    @field_validator('baselines')
    @classmethod
    def check_baselines(cls, v):
        unknown = sorted(set(v) - {'uniform', 'random'})
        if unknown:
            raise ValueError(f'Unknown baselines {unknown}. Use uniform or random.')
        return v

    @field_validator('ksg_method')
    @classmethod
    def check_ksg_method(cls, v):
        if v not in METHODS:
            raise ValueError(f'ksg_method must be one of {METHODS}: {v}')
        return v

    @field_validator('release_mode')
    @classmethod
    def check_release_mode(cls, v):
        allowed = (ReleaseMode.hard, ReleaseMode.multiplicative, ReleaseMode.stochastic)
        if v is not None and v not in allowed:
            raise ValueError(f'release_mode must be hard, multiplicative or stochastic: '
                             f'{v.value}')
        return v

    def trainer_config(self) -> TrainerConfig:
        fields = TrainerConfig.model_fields
        return TrainerConfig(**{k: v for k, v in self if k in fields})

    def evaluation_config(self) -> EvaluationConfig:
        shared = {'lr': self.lr, 'rho': self.rho, 'eps': self.eps,
                  'width_scale': self.width_scale, 'batch_size': self.batch_size}
        return EvaluationConfig(
            attacker=AttackerConfig(iterations=self.attacker_iterations, **shared),
            utility=UtilityFitConfig(iterations=self.utility_iterations, **shared),
            release_mode=self.release_mode, ksg_k=self.ksg_k,
            ksg_method=self.ksg_method, random_repeats=self.random_repeats
        )

    def write(self, folder: Union[str, pathlib.Path]) -> pathlib.Path:
        """Write the effective configuration as ``run.yaml`` in ``folder``."""
        text = yaml.safe_dump(self.model_dump(mode='json'), sort_keys=False)
        return atomic_write(pathlib.Path(folder, RUN_FILE), text)


def parse_config_text(text: str) -> Dict[str, Any]:
    """Parse flat ``key = value`` lines into a dictionary of typed values."""
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ValueError(f'line {number}: expected "key = value", got "{line}"')
        key, raw = (part.strip() for part in line.split('=', 1))
        key = key.replace('-', '_')
        key = _ALIASES.get(key, key)
        if not key:
            raise ValueError(f'line {number}: missing key')
        if key in values:
            raise ValueError(f'line {number}: duplicate key "{key}"')
        try:
            values[key] = yaml.safe_load(raw) if raw else None
        except yaml.YAMLError as error:
            raise ValueError(f'line {number}: cannot read value of "{key}": {error}')
    return values


def load_config_file(path: Union[str, pathlib.Path]) -> Dict[str, Any]:
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'Config file not found: {path}')
    return parse_config_text(path.read_text(encoding='utf-8'))


def build_run_config(file_values: Optional[Dict[str, Any]] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Layer explicit overrides over config-file values over the defaults."""
    values = dict(file_values or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**values)
