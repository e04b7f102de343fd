import json

import pytest
from click.testing import CliRunner

from sparse_meter.checkpoint import load_system
from sparse_meter.cli import main, CHECKPOINT_FILE, HISTORY_FILE, METRICS_FILE, \
    RESULTS_FILE
from sparse_meter.config import RUN_FILE
from sparse_meter.data import load_csv

TINY = ['--n-days', '30', '--iterations', '2', '--batch-size', '4',
        '--adversary-steps', '1', '--width-scale', '0.125', '--no-early-stopping']
TINY_EVAL = ['--attacker-iterations', '2', '--utility-iterations', '2']


def _invoke(args):
    return CliRunner().invoke(main, args)


def test_synth_data(tmp_path):
    first, second, other = (tmp_path / name for name in ('a.csv', 'b.csv', 'c.csv'))
    assert _invoke(['synth-data', '--n-days', '25', '--seed', '4', '--out',
                    str(first)]).exit_code == 0
    _invoke(['synth-data', '--n-days', '25', '--seed', '4', '--out', str(second)])
    _invoke(['synth-data', '--n-days', '25', '--seed', '5', '--out', str(other)])
    assert first.read_bytes() == second.read_bytes()
    assert first.read_bytes() != other.read_bytes()
    assert len(load_csv(first)) == 25 * 24


def test_synth_data_needs_enough_days(tmp_path):
    result = _invoke(['synth-data', '--n-days', '10', '--out', str(tmp_path / 'a.csv')])
    assert result.exit_code == 1
    assert not (tmp_path / 'a.csv').exists()


@pytest.mark.parametrize('args', [
    ['train', '--no-such-flag'],
    ['train', '--lambda', '-1'],
    ['eval', 'missing.sppr'],
    ['baseline'],
    ['mi', '--source', 'checkpoint'],
])
def test_usage_errors(args):
    assert _invoke(args).exit_code == 1


def test_train_missing_data(tmp_path):
    out = tmp_path / 'out'
    result = _invoke(['train', '--data', str(tmp_path / 'nothing.csv'), '--out',
                      str(out)])
    assert result.exit_code == 1
    assert 'does not exist' in result.output
    assert not out.exists()


def test_train_divergence(tmp_path):
    config = tmp_path / 'run.cfg'
    config.write_text('divergence_threshold = 1.0e-12\n')
    result = _invoke(['train', '--config', str(config), '--out', str(tmp_path / 'out')]
                     + TINY)
    assert result.exit_code == 2
    assert 'diverged' in result.output


def test_train_and_eval(tmp_path):
    out = tmp_path / 'run'
    result = _invoke(['train', '--lambda', '0.5', '--out', str(out)] + TINY)
    assert result.exit_code == 0, result.output
    assert 'L_U: ' in result.output
    for name in (CHECKPOINT_FILE, HISTORY_FILE, RUN_FILE):
        assert (out / name).is_file()
    assert len((out / HISTORY_FILE).read_text().splitlines()) == 3

    again = tmp_path / 'again'
    _invoke(['train', '--lambda', '0.5', '--out', str(again)] + TINY)
    assert (again / CHECKPOINT_FILE).read_bytes() == (out / CHECKPOINT_FILE).read_bytes()

    metrics_dir = tmp_path / 'metrics'
    result = _invoke(['eval', str(out / CHECKPOINT_FILE), '--n-days', '30', '--out',
                      str(metrics_dir)] + TINY_EVAL)
    assert result.exit_code == 0, result.output
    metrics = json.loads((metrics_dir / METRICS_FILE).read_text())
    assert metrics['mode'] == 'smart'
    assert metrics['lam'] == 0.5
    assert 0 <= metrics['samples_per_day'] <= 24
    assert 0 <= metrics['balanced_accuracy'] <= 1
    evaluated = load_system(metrics_dir / CHECKPOINT_FILE)
    assert evaluated.attacker.config.cells == 32
    assert evaluated.releaser.checksum() == \
        load_system(out / CHECKPOINT_FILE).releaser.checksum()

    result = _invoke(['mi', '--source', 'checkpoint', '--checkpoint',
                      str(out / CHECKPOINT_FILE), '--n-days', '30'])
    assert result.exit_code == 0, result.output
    assert result.output.startswith('ksg_mi_nats: ')


def test_baseline(tmp_path):
    result = _invoke(['baseline', '--kind', 'uniform', '--d', '4', '--n-days', '30',
                      '--out', str(tmp_path)] + TINY_EVAL)
    assert result.exit_code == 0, result.output
    metrics = json.loads((tmp_path / METRICS_FILE).read_text())
    assert metrics['mode'] == 'uniform'
    assert metrics['samples_per_day'] == 6
    assert metrics['lam'] is None


@pytest.mark.parametrize('command', ['eval', 'baseline'])
def test_help_explains_suppressed_hours(command):
    result = _invoke([command, '--help'])
    assert result.exit_code == 0
    assert 'train mean in watts, not 0 W' in ' '.join(result.output.split())


def test_mi_raw():
    result = _invoke(['mi', '--n-days', '30', '-k', '3'])
    assert result.exit_code == 0, result.output
    assert float(result.output.split(':')[1]) > 0


def test_sweep(tmp_path):
    out = tmp_path / 'sweep'
    result = _invoke(['sweep', '--lambdas', '0,1', '--out', str(out),
                      '--save-checkpoints'] + TINY + TINY_EVAL)
    assert result.exit_code == 0, result.output
    lines = (out / RESULTS_FILE).read_text().splitlines()
    assert lines[0] == ('lambda,ne2,balanced_accuracy,avg_samples_per_day,'
                        'ksg_mi_nats,achieved_mse,mode,seed,status')
    assert [line.split(',')[0] for line in lines[1:]] == ['0.0', '1.0']
    assert all(line.endswith(',ok') for line in lines[1:])
    assert (out / 'plotdata_tradeoff.csv').is_file()
    assert (out / 'checkpoints' / 'lambda_1.0_seed_0.sppr').is_file()
