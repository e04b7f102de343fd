import numpy as np
import pytest

from sparse_meter.data import TRAIN, VALIDATION, TEST, WindowedDataset, NormalizationStats
from sparse_meter.evaluation import ne2
from sparse_meter.losses import releaser_loss, adversary_loss
from sparse_meter.mechanism import ReleaseMode, soft_mask_apply
from sparse_meter.nets import LstmStackConfig, OutputHead, init_params
from sparse_meter.trainer import (
    TrainerConfig, TrainingMode, TrainingDivergedError, SequenceBatch, EpochSampler,
    HISTORY_HEADER, sample_minibatch, init_system, adversary_inner_steps, outer_step,
    train, select_tau, validation_loss, network_configs, releaser_forward,
    adversary_forward, utility_forward, reconstruct
)

from gradcheck import check_gradients


def _config(**kwargs):
    values = dict(width_scale=0.125, batch_size=8, iterations=4, adversary_steps=2,
                  early_stopping=False, seed=3)
    values.update(kwargs)
    return TrainerConfig(**values)


def test_defaults():
    config = TrainerConfig()
    assert (config.batch_size, config.adversary_steps, config.noise_dim, config.beta) \
        == (128, 4, 8, 1.5)
    assert (config.lr, config.rho, config.tau) == (1e-3, 0.9, 0.5)
    releaser, adversary, utility = network_configs(config)
    assert (releaser.num_layers, releaser.cells, releaser.input_dim) == (4, 64, 10)
    assert (adversary.num_layers, adversary.cells) == (2, 32)
    assert (utility.num_layers, utility.cells) == (3, 48)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainerConfig(lam=-1)
    with pytest.raises(ValueError):
        TrainerConfig(tau_grid=[0.5, 1.5])
    with pytest.raises(ValueError):
        TrainerConfig(learning_rate=0.1)


def test_training_modes():
    assert TrainingMode.smart.release_mode == ReleaseMode.hard
    assert TrainingMode('smart-multiplicative').release_mode == ReleaseMode.multiplicative
    assert TrainingMode.additive.additive
    assert LstmStackConfig.releaser(additive=True).head == OutputHead.linear_scalar


def test_sample_minibatch(small_dataset):
    train_set = small_dataset.subset(TRAIN)
    a = sample_minibatch(train_set, 8, 3, np.random.default_rng(5))
    b = sample_minibatch(train_set, 8, 3, np.random.default_rng(5))
    assert np.array_equal(a.indices, b.indices)
    assert np.array_equal(a.u, b.u)
    assert len(set(a.indices)) == 8
    assert a.releaser_inputs().shape == (8, 24, 5)
    assert np.array_equal(a.releaser_inputs()[..., 0], a.x)
    assert np.array_equal(a.releaser_inputs()[..., 1], a.y)
    with pytest.raises(ValueError):
        sample_minibatch(train_set, len(train_set) + 1, 3, np.random.default_rng(0))


def test_epoch_sampler_covers_dataset(small_dataset):
    train_set = small_dataset.subset(TRAIN)
    sampler = EpochSampler(seed=1)
    batch_size = 5
    seen = np.concatenate([sampler.draw(train_set, batch_size, 2).indices
                           for _ in range(len(train_set) // batch_size)])
    assert len(set(seen.tolist())) == len(seen)


def test_init_system_additive():
    system = init_system(_config(mode='additive'))
    assert system.utility is None
    assert system.releaser.config.head == OutputHead.linear_scalar


def test_adversary_phase_freezes_releaser_and_utility(small_dataset):
    config = _config()
    system = init_system(config)
    releaser, utility, adversary = (system.releaser.checksum(), system.utility.checksum(),
                                    system.adversary.checksum())
    loss = adversary_inner_steps(system, small_dataset.subset(TRAIN), config)
    assert np.isfinite(loss)
    assert system.releaser.checksum() == releaser
    assert system.utility.checksum() == utility
    assert system.adversary.checksum() != adversary


def test_adversary_learns_label_marginal_from_empty_release():
    rng = np.random.default_rng(21)
    x = (rng.random((200, 24)) < 0.3).astype(np.int8)
    data = WindowedDataset(
        y=rng.normal(size=x.shape), x=x, household=np.full(200, 'h', dtype=object),
        day_start=np.arange(200) * 86400, stats=NormalizationStats(0.0, 1.0)
    )
    config = _config(adversary_steps=300, batch_size=32, lr=1e-2)
    system = init_system(config)
    weight, bias = system.releaser.head
    weight.values[:] = 0.0
    bias.values[:] = -50.0
    adversary_inner_steps(system, data, config)
    settled = adversary_inner_steps(
        system, data, config.model_copy(update={'adversary_steps': 50}))
    p = x.mean()
    entropy = -(p * np.log(p) + (1 - p) * np.log(1 - p))
    assert settled == pytest.approx(entropy, abs=0.02)


def test_outer_step_freezes_adversary(small_dataset):
    config = _config()
    system = init_system(config)
    releaser, utility, adversary = (system.releaser.checksum(), system.utility.checksum(),
                                    system.adversary.checksum())
    outer_step(system, small_dataset.subset(TRAIN), config)
    assert system.adversary.checksum() == adversary
    assert system.releaser.checksum() != releaser
    assert system.utility.checksum() != utility


def test_outer_step_zero_lambda(small_dataset):
    config = _config(lam=0.0, beta=0.0)
    system = init_system(config)
    result = outer_step(system, small_dataset.subset(TRAIN), config)
    assert result.releaser == result.utility


def test_train_history_and_reproducibility(small_dataset, tmp_path):
    config = _config()
    train_set = small_dataset.subset(TRAIN)
    a = train(train_set, config)
    b = train(train_set, config)
    assert len(a.history) == config.iterations
    assert [r.iteration for r in a.history] == [1, 2, 3, 4]
    assert [r.row() for r in a.history] == [r.row() for r in b.history]
    for name in ('releaser', 'adversary', 'utility'):
        assert getattr(a, name).checksum() == getattr(b, name).checksum()
    path = a.write_history(tmp_path / 'history.csv')
    lines = path.read_text().splitlines()
    assert lines[0] == ','.join(HISTORY_HEADER) == 'iteration,L_U,L_A,L_R,entropy_sum'
    assert len(lines) == 5


def test_zero_lambda_training_beats_initial_utility(small_dataset):
    config = _config(lam=0.0, width_scale=0.25, batch_size=16, iterations=100,
                     adversary_steps=1, lr=3e-3)
    system = train(small_dataset.subset(TRAIN), config)
    initial = init_system(config).utility
    test = small_dataset.subset(TEST)
    z = test.y * system.soft_output(test.y, test.x, seed=0)
    watts = small_dataset.stats.invert

    def error(utility):
        return ne2(watts(test.y), watts(reconstruct(utility, z)))
    assert error(system.utility) < error(initial)


def test_train_seed_changes_result(small_dataset):
    train_set = small_dataset.subset(TRAIN)
    a = train(train_set, _config(iterations=1))
    b = train(train_set, _config(iterations=1, seed=4))
    assert a.releaser.checksum() != b.releaser.checksum()


def test_train_needs_normalized_data(small_dataset):
    raw = small_dataset.subset(TRAIN)
    raw = type(raw)(y=raw.raw_y, x=raw.x, household=raw.household,
                    day_start=raw.day_start)
    with pytest.raises(ValueError):
        train(raw, _config())


def test_divergence(small_dataset):
    config = _config(divergence_threshold=1e-12)
    with pytest.raises(TrainingDivergedError) as info:
        train(small_dataset.subset(TRAIN), config)
    assert info.value.iteration == 1


def test_early_stopping(small_dataset):
    config = _config(iterations=40, early_stopping=True, patience=2, validation_every=1,
                     min_delta=1e3)
    system = train(small_dataset.subset(TRAIN), config,
                   small_dataset.subset(VALIDATION))
    assert system.stopped_early
    assert len(system.history) < config.iterations


def test_release_modes(small_dataset):
    system = train(small_dataset.subset(TRAIN), _config(iterations=2))
    test = small_dataset.subset(VALIDATION)
    hard = system.release(test.y, test.x, seed=0)
    assert hard.mode == ReleaseMode.hard
    assert set(np.unique(hard.mask)) <= {0.0, 1.0}
    multiplicative = system.release(test.y, test.x, seed=0, mode='multiplicative')
    assert np.array_equal(hard.mask == 0, multiplicative.mask == 0)
    again = system.release(test.y, test.x, seed=0)
    assert np.array_equal(hard.z, again.z)
    stochastic = system.release(test.y, test.x, seed=0, mode='stochastic')
    assert np.array_equal(stochastic.z, test.y * stochastic.mask)
    with pytest.raises(ValueError):
        system.release(test.y, test.x, seed=0, mode='additive')


def test_additive_training(small_dataset):
    config = _config(mode='additive', iterations=2)
    system = train(small_dataset.subset(TRAIN), config)
    test = small_dataset.subset(VALIDATION)
    out = system.release(test.y, test.x, seed=1)
    assert out.mode == ReleaseMode.additive
    noise = system.soft_output(test.y, test.x, seed=1)
    assert np.allclose(out.z, test.y + noise)


def test_select_tau(small_dataset):
    config = _config(iterations=2, tau_grid=[0.3, 0.5, 0.7])
    system = train(small_dataset.subset(TRAIN), config)
    validation = small_dataset.subset(VALIDATION)
    assert select_tau(system, validation) in (0.3, 0.5, 0.7)
    assert np.isfinite(validation_loss(system, validation))
    selected = train(small_dataset.subset(TRAIN), config.model_copy(
        update={'select_tau': True}), validation)
    assert selected.tau in (0.3, 0.5, 0.7)


def test_end_to_end_gradients():
    rng = np.random.default_rng(0)
    noise_dim = 2
    releaser = init_params(LstmStackConfig(num_layers=1, cells=4, input_dim=2 + noise_dim,
                                           head=OutputHead.sigmoid_scalar), 1)
    adversary = init_params(LstmStackConfig(num_layers=1, cells=4, input_dim=1,
                                            head=OutputHead.binary_softmax), 2)
    utility = init_params(LstmStackConfig(num_layers=1, cells=4, input_dim=1,
                                          head=OutputHead.linear_scalar), 3)
    x = rng.integers(0, 2, size=(2, 4))
    batch = SequenceBatch(y=rng.normal(size=(2, 4)), x=x, u=rng.random((2, 4, noise_dim)),
                          indices=np.arange(2))

    def release():
        return soft_mask_apply(batch.y, releaser_forward(releaser, batch)).z

    def loss_r():
        z = release()
        return releaser_loss(batch.y, utility_forward(utility, z),
                             adversary_forward(adversary, z), 1.0)

    def loss_a():
        return adversary_loss(adversary_forward(adversary, release()), batch.x)

    def loss_u():
        z = release()
        return releaser_loss(batch.y, utility_forward(utility, z),
                             adversary_forward(adversary.frozen(), z), 0.0)

    everything = list(releaser) + list(utility) + list(adversary)
    assert check_gradients(loss_r, everything) == \
        releaser.parameter_count + utility.parameter_count + adversary.parameter_count
    check_gradients(loss_a, list(adversary) + list(releaser))
    check_gradients(loss_u, list(utility) + list(releaser))
