import pytest
import yaml

from sparse_meter.config import (
    RunConfig, RUN_FILE, parse_config_text, load_config_file, build_run_config
)
from sparse_meter.mechanism import ReleaseMode
from sparse_meter.trainer import TrainerConfig


def test_parse_config_text():
    text = """
    # trade-off run
    lambda = 2.5
    batch-size = 64   # smaller batches
    lambdas = [0, 0.5, 1]
    early_stopping = false
    data = meters/
    """
    values = parse_config_text(text)
    assert values == {
        'lam': 2.5, 'batch_size': 64, 'lambdas': [0, 0.5, 1],
        'early_stopping': False, 'data': 'meters/'
    }


@pytest.mark.parametrize('text, message', [
    ('lam 1', 'line 1'),
    ('seed = 1\nseed = 2', 'duplicate key "seed"'),
    ('\n = 3', 'line 2: missing key'),
    ('lambdas = [1, 2', 'line 1'),
])
def test_parse_errors(text, message):
    with pytest.raises(ValueError, match=message):
        parse_config_text(text)


def test_load_config_file(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text('iterations = 10\n')
    assert load_config_file(path) == {'iterations': 10}
    with pytest.raises(FileNotFoundError):
        load_config_file(tmp_path / 'missing.cfg')


def test_precedence():
    config = build_run_config({'lam': 2.0, 'seed': 3}, {'lam': 4.0, 'seed': None})
    assert config.lam == 4.0
    assert config.seed == 3
    assert config.iterations == 3000


def test_unknown_key():
    with pytest.raises(ValueError):
        build_run_config({'learning_rate': 0.1})


def test_validation():
    with pytest.raises(ValueError):
        RunConfig(lambdas=[])
    with pytest.raises(ValueError):
        RunConfig(lambdas=[1, -1])
    with pytest.raises(ValueError):
        RunConfig(baselines=['uniform', 'oracle'])
    with pytest.raises(ValueError):
        RunConfig(ksg_method='kd')
    with pytest.raises(ValueError):
        RunConfig(release_mode='additive')
    with pytest.raises(ValueError):
        RunConfig(n_days=10)
    assert RunConfig(release_mode='stochastic').release_mode == ReleaseMode.stochastic


def test_trainer_and_evaluation_configs():
    config = RunConfig(lam=0.5, width_scale=0.5, batch_size=16, attacker_iterations=7,
                       random_repeats=2, ksg_k=3)
    trainer = config.trainer_config()
    assert type(trainer) is TrainerConfig
    assert trainer.lam == 0.5
    assert trainer.batch_size == 16
    evaluation = config.evaluation_config()
    assert evaluation.attacker.iterations == 7
    assert evaluation.attacker.width_scale == 0.5
    assert evaluation.utility.batch_size == 16
    assert (evaluation.random_repeats, evaluation.ksg_k) == (2, 3)


def test_write(tmp_path):
    config = RunConfig(lam=0.25, baselines=['uniform'])
    path = config.write(tmp_path)
    assert path.name == RUN_FILE
    values = yaml.safe_load(path.read_text())
    assert values['lam'] == 0.25
    assert values['mode'] == 'smart'
    assert RunConfig(**values) == config
