"""Privacy-utility trends on synthetic data at half network width.

Run with ``pytest --runslow``. The sweep takes tens of minutes on a desktop CPU.
"""
import numpy as np
import pytest

from sparse_meter.data import prepare_dataset, TRAIN, TEST
from sparse_meter.losses import LN2, adversary_loss
from sparse_meter.nets import predict
from sparse_meter.evaluation import balanced_accuracy
from sparse_meter.evaluation.sweep import EvaluationConfig, tradeoff_sweep
from sparse_meter.trainer import (
    TrainerConfig, AttackerConfig, UtilityFitConfig, train, train_attacker,
    predict_occupancy
)

SEEDS = (0, 1, 2)
LAMBDAS = (0.0, 0.5, 1.0, 2.0, 5.0)
BAND = 0.03

pytestmark = pytest.mark.slow


@pytest.fixture(scope='module')
def dataset():
    return prepare_dataset('synth', seed=11, n_days=365)


@pytest.fixture(scope='module')
def points(dataset):
    trainer = TrainerConfig(width_scale=0.5, iterations=1500)
    shared = dict(width_scale=0.5, iterations=1500)
    evaluation = EvaluationConfig(attacker=AttackerConfig(**shared),
                                  utility=UtilityFitConfig(**shared))
    return tradeoff_sweep(dataset, LAMBDAS, trainer, evaluation, seeds=SEEDS,
                          baselines=['random'], match_random_rates=True, jobs=3)


def _mean(points, field, mode, lam=None):
    values = [getattr(p, field) for p in points
              if p.ok and p.mode == mode and p.lam == lam]
    assert values
    return float(np.mean(values))


@pytest.mark.parametrize('seed', SEEDS)
def test_raw_attacker_ceiling(seed):
    data = prepare_dataset('synth', seed=seed, n_days=365)
    train_set, test = data.subset(TRAIN), data.subset(TEST)
    attacker = train_attacker(train_set.y, train_set.x,
                              AttackerConfig(width_scale=0.5, iterations=300, seed=seed))
    assert balanced_accuracy(predict_occupancy(attacker, test.y), test.x) > 0.9


def test_privacy_improves_with_lambda(points):
    accuracy = [_mean(points, 'balanced_accuracy', 'smart', lam) for lam in LAMBDAS]
    error = [_mean(points, 'ne2', 'smart', lam) for lam in LAMBDAS]
    for before, after in zip(accuracy, accuracy[1:]):
        assert after <= before + BAND
    for before, after in zip(error, error[1:]):
        assert after >= before - BAND
    assert all(accuracy[0] >= a - BAND for a in accuracy[1:])


def test_smart_beats_random_at_matched_rate(points):
    learned = [p for p in points[:len(LAMBDAS) * len(SEEDS)]
               if p.ok and p.samples_per_day > 0]
    matched = points[len(points) - len(learned):]
    pairs = [(p, m) for p, m in zip(learned, matched)
             if p.lam > 0 and abs(p.samples_per_day - m.samples_per_day) <= 1]
    assert pairs
    smart = np.mean([p.balanced_accuracy for p, _ in pairs])
    random = np.mean([m.balanced_accuracy for _, m in pairs])
    assert smart <= random - BAND


def test_smart_leaks_less_at_matched_error(points):
    random = sorted((p for p in points if p.ok and p.mode == 'random'),
                    key=lambda p: p.ne2)
    errors = np.array([p.ne2 for p in random])
    leakage = np.array([p.ksg_mi_nats for p in random])
    compared = 0
    for p in points:
        if p.ok and p.mode == 'smart' and p.lam > 0 and \
                errors[0] - 0.02 <= p.ne2 <= errors[-1] + 0.02:
            assert p.ksg_mi_nats <= np.interp(p.ne2, errors, leakage) + 0.02
            compared += 1
    assert compared


def test_large_lambda_maximizes_adversary_entropy(dataset):
    config = TrainerConfig(width_scale=0.5, iterations=1500, lam=10.0,
                           early_stopping=False)
    system = train(dataset.subset(TRAIN), config)
    entropy = np.mean([r.entropy_sum for r in system.history[-50:]]) / dataset.steps
    assert abs(entropy - LN2) < 0.05


def test_blind_adversary_learns_label_marginal(rng):
    labels = (rng.random((512, 24)) < 0.3).astype(np.int8)
    zeros = np.zeros(labels.shape)
    attacker = train_attacker(zeros, labels, AttackerConfig(width_scale=0.25,
                                                            iterations=400,
                                                            batch_size=64))
    loss = adversary_loss(predict(zeros[..., np.newaxis], attacker), labels).item()
    marginal = -(0.3 * np.log(0.3) + 0.7 * np.log(0.7))
    assert loss == pytest.approx(marginal, abs=0.02)
