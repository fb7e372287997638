import threading

import numpy as np
import pytest

from errors import CheckpointError, ColumnError, TrainingError
from network import ModelParams, load_checkpoint, save_checkpoint
from tests.conftest import with_train
from train import (
    AdamState,
    LabelScaler,
    MetricsWriter,
    TrainState,
    adam_step,
    atom_count_labels,
    clip_global_norm,
    cosine_lr,
    evaluate_mae,
    finetune,
    load_training_state,
    plan_epoch,
    pretrain,
    read_metrics,
    save_training_state,
    total_steps,
    train_step,
)
from train.loop import PREFETCH_THREAD, noise_rng, perturb_graph, prefetch
from verify.checks import random_graph


# ---------------------------
# Schedule and optimizer
# ---------------------------

def test_cosine_schedule_endpoints():
    assert cosine_lr(0, 10, 1e-3, 1e-4) == pytest.approx(1e-3)
    assert cosine_lr(5, 10, 1e-3, 1e-4) == pytest.approx(5.5e-4)
    assert cosine_lr(10, 10, 1e-3, 1e-4) == pytest.approx(1e-4)
    assert cosine_lr(3, 0, 1e-3, 1e-4) == 1e-3
    with pytest.raises(ValueError):
        cosine_lr(11, 10, 1e-3, 1e-4)


def test_global_norm_clipping():
    grads = {"a": np.array([3.0, 0.0]), "b": np.array([[4.0]])}
    clipped, norm, did = clip_global_norm(grads, 1.0)
    assert norm == pytest.approx(5.0) and did
    np.testing.assert_allclose(clipped["a"], [0.6, 0.0])
    np.testing.assert_allclose(clipped["b"], [[0.8]])
    same, _, did = clip_global_norm(grads, 10.0)
    assert same is grads and not did


def test_first_adam_step_moves_by_lr_times_sign():
    params = ModelParams({"w": np.array([1.0, 1.0, 1.0])})
    state = AdamState.zeros(params)
    new, after = adam_step(params, {"w": np.array([2.0, -0.5, 0.0])}, state, 0.01)
    np.testing.assert_allclose(new["w"], [0.99, 1.01, 1.0], rtol=1e-7)
    assert after.step == 1 and state.step == 0


def test_non_finite_gradient_is_refused():
    params = ModelParams({"w": np.zeros(2)})
    with pytest.raises(TrainingError, match="non-finite gradient for parameter w"):
        adam_step(params, {"w": np.array([np.nan, 0.0])}, AdamState.zeros(params), 0.01)


def test_optimizer_state_round_trip(tiny_config):
    params = ModelParams.initialize(tiny_config.model, np.random.default_rng(0))
    state = AdamState.zeros(params)
    grads = {k: np.ones_like(a) for k, a in params.arrays.items()}
    _, state = adam_step(params, grads, state, 1e-3)
    back = AdamState.from_extra(state.to_extra(), params)
    assert back.step == 1
    assert all(np.array_equal(back.m[k], state.m[k]) and np.array_equal(back.v[k], state.v[k])
               for k in params.arrays)
    extra = state.to_extra()
    del extra["adam.v.embed.f_a"]
    with pytest.raises(CheckpointError, match="adam.v.embed.f_a"):
        AdamState.from_extra(extra, params)


# ---------------------------
# Pretraining
# ---------------------------

def test_epoch_plan_is_deterministic(tiny_config, toy_graphs):
    a = plan_epoch(toy_graphs, tiny_config.train, 3)
    b = plan_epoch(toy_graphs, tiny_config.train, 3)
    np.testing.assert_array_equal(a.order, b.order)
    assert a.groups == b.groups
    assert sorted(a.order.tolist()) == [0, 1, 2, 3]
    assert sorted(i for g in a.groups for i in g) == [0, 1, 2, 3]
    assert total_steps(toy_graphs, tiny_config.train) == 1


def test_unshuffled_plan_keeps_dataset_order(tiny_config, toy_graphs):
    plan = plan_epoch(toy_graphs, with_train(tiny_config, shuffle=False, max_vertices=16).train, 0)
    assert plan.order.tolist() == [0, 1, 2, 3]
    assert plan.groups == [[0, 1], [2], [3]]


def test_zero_learning_rate_leaves_parameters(tiny_config, ethanol):
    state = TrainState.fresh(tiny_config)
    before = {k: a.copy() for k, a in state.params.arrays.items()}
    samples = [perturb_graph(ethanol, tiny_config.train, np.random.default_rng(0))]
    result = train_step(state, [ethanol], samples, tiny_config, 0.0)
    assert np.isfinite(result.loss) and result.grad_norm > 0
    assert state.step == 1
    assert all(np.array_equal(state.params[k], before[k]) for k in before)


def test_fixed_batch_loss_goes_down(tiny_config, ethanol):
    config = with_train(tiny_config, denoise_mode="atom")
    state = TrainState.fresh(config)
    samples = [perturb_graph(ethanol, config.train, np.random.default_rng(1))]
    losses = [train_step(state, [ethanol], samples, config, 1e-3).loss for _ in range(20)]
    assert losses[-1] < losses[0]


def test_noise_streams_are_keyed_by_sample(tiny_config):
    a = noise_rng(tiny_config.train, 0, 5).standard_normal(3)
    b = noise_rng(tiny_config.train, 0, 5).standard_normal(3)
    c = noise_rng(tiny_config.train, 1, 5).standard_normal(3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_prefetch_yields_in_order_and_reraises():
    assert list(prefetch(lambda i: i * i, 5)) == [0, 1, 4, 9, 16]

    def failing(i):
        if i == 2:
            raise TrainingError("bad batch")
        return i

    with pytest.raises(TrainingError, match="bad batch"):
        list(prefetch(failing, 4))


def test_prefetch_worker_stops_when_consumer_leaves():
    produced = []

    def produce(i):
        produced.append(i)
        return i

    batches = prefetch(produce, 100, depth=2, poll=0.01)
    assert next(batches) == 0
    batches.close()
    for thread in threading.enumerate():
        if thread.name == PREFETCH_THREAD:
            thread.join(timeout=5.0)
            assert not thread.is_alive()
    assert len(produced) <= 4


def test_pretrain_checkpoint_labels(tiny_config, water, methane):
    config = with_train(tiny_config, epochs=2)
    labels = []
    state, history = pretrain([water, methane], config, on_checkpoint=lambda label, s: labels.append(label))
    assert labels == ["epoch_0001", "final"]
    assert [h.epoch for h in history] == [0, 1]
    assert state.epoch == 2 and state.step == 2


def test_pretrain_needs_graphs(tiny_config):
    with pytest.raises(TrainingError, match="no training graphs"):
        pretrain([], tiny_config)


def test_resume_matches_uninterrupted_run(tmp_path, tiny_config, water, methane, ethanol):
    config = with_train(tiny_config, epochs=3, max_vertices=10)
    graphs = [water, methane, ethanol]
    saved = tmp_path / "epoch_0001.ept"

    def keep_first(label, state):
        if label == "epoch_0001":
            save_training_state(saved, state, config)

    straight, _ = pretrain(graphs, config, on_checkpoint=keep_first)
    restored, restored_config = load_training_state(saved, expected=config)
    assert restored.epoch == 1 and restored_config == config
    resumed, history = pretrain(graphs, config, state=restored)
    assert [h.epoch for h in history] == [1, 2]
    assert resumed.step == straight.step
    assert all(np.array_equal(resumed.params[k], straight.params[k]) for k in straight.params.names())


def test_training_state_needs_counters(tmp_path, tiny_config):
    path = tmp_path / "weights.ept"
    state = TrainState.fresh(tiny_config)
    save_checkpoint(path, state.params, tiny_config)
    with pytest.raises(CheckpointError, match="no training counters"):
        load_training_state(path)
    fresh, _ = load_training_state(path, fresh_optimizer=True)
    assert fresh.step == 0 and fresh.epoch == 0
    assert all(not a.any() for a in fresh.optimizer.m.values())


def test_saved_training_state_keeps_counters(tmp_path, tiny_config, water):
    state = TrainState.fresh(tiny_config)
    train_step(state, [water], [perturb_graph(water, tiny_config.train, np.random.default_rng(2))],
               tiny_config, 1e-3)
    state.epoch = 4
    path = tmp_path / "state.ept"
    save_training_state(path, state, tiny_config)
    back, _ = load_training_state(path, expected=tiny_config)
    assert (back.step, back.epoch, back.optimizer.step) == (1, 4, 1)
    assert "adam.step" in load_checkpoint(path).extra


# ---------------------------
# Metrics
# ---------------------------

def test_metrics_writer_appends(tmp_path):
    path = tmp_path / "metrics.csv"
    row = {"step": 1, "lr": 1e-3, "loss": 2.5, "loss_T": 2.0, "loss_R": 0.5, "grad_norm": 1.25, "wall_ms": 3.0}
    with MetricsWriter(path) as writer:
        writer.write(row)
    with MetricsWriter(path) as writer:
        writer.write(dict(row, step=2))
    rows = read_metrics(path)
    assert [r["step"] for r in rows] == [1.0, 2.0]
    assert rows[0]["lr"] == 1e-3
    assert path.read_text().count("step,lr") == 1


def test_metrics_reader_names_missing_column(tmp_path):
    path = tmp_path / "metrics.csv"
    path.write_text("step,lr,loss\n1,0.1,2.0\n")
    with pytest.raises(ColumnError, match="'loss_T'"):
        read_metrics(path)
    path.write_text("step,lr,loss,loss_T,loss_R,grad_norm,wall_ms\n1,0.1,nan?,0,0,0,0\n")
    with pytest.raises(ColumnError, match="line 2"):
        read_metrics(path)


# ---------------------------
# Finetuning
# ---------------------------

def test_label_scaler():
    scaler = LabelScaler.fit([1.0, 2.0, 3.0], "std")
    assert scaler.center == pytest.approx(2.0)
    assert scaler.denormalize(scaler.normalize(7.5)) == pytest.approx(7.5)
    mad = LabelScaler.fit([1.0, 2.0, 10.0], "mad")
    assert (mad.center, mad.scale) == (2.0, 1.0)
    assert LabelScaler.fit([4.0, 4.0], "std").scale == 1.0
    assert LabelScaler.fit([1.0, 5.0]) == LabelScaler()
    with pytest.raises(ValueError, match="label normalisation"):
        LabelScaler.fit([1.0], "minmax")


def test_finetune_runs_and_reports(tmp_path, tiny_config, water, methane):
    graphs = [water, methane]
    labels = atom_count_labels(graphs)
    config = with_train(tiny_config, label_norm="std")
    with MetricsWriter(tmp_path / "ft.csv") as writer:
        state, scaler, history = finetune(graphs, labels, config, steps=3, writer=writer)
    assert state.step == 3 and len(history) == 3
    assert np.all(np.isfinite(history))
    assert scaler.center == pytest.approx(4.0)
    assert len(read_metrics(tmp_path / "ft.csv")) == 3
    assert np.isfinite(evaluate_mae(state.params, graphs, labels, config, scaler))


def test_finetune_resumes_from_state_step(tiny_config, water, methane):
    graphs, labels = [water, methane], [1.0, -2.0]
    straight, _, _ = finetune(graphs, labels, tiny_config, steps=4)
    halfway, _, first = finetune(graphs, labels, tiny_config, steps=2)
    resumed, _, rest = finetune(graphs, labels, tiny_config, steps=4, state=halfway)
    assert (len(first), len(rest)) == (2, 2)
    assert resumed.step == straight.step == 4
    assert all(np.array_equal(resumed.params[k], straight.params[k]) for k in straight.params.names())


def test_finetune_without_auxiliary_loss(tiny_config, water):
    config = with_train(tiny_config, noisy_node_weight=0.0)
    _, _, history = finetune([water], [3.0], config, steps=1)
    assert len(history) == 1


def test_finetune_label_count_mismatch(tiny_config, water):
    with pytest.raises(TrainingError, match="1 labels for 2 graphs"):
        finetune([water, water], [1.0], tiny_config, steps=1)


@pytest.mark.slow
def test_block_complete_pretraining_overfits_toy_set(desk_config):
    rng = np.random.default_rng(0)
    graphs = [random_graph(rng, max_atoms=12, thresholds=desk_config.graph) for _ in range(32)]
    config = with_train(desk_config, denoise_mode="block-C", lr=1e-3, min_lr=1e-4, epochs=2000)
    assert total_steps(graphs, config.train) == 2000
    _, history = pretrain(graphs, config)
    assert history[-1].loss <= 0.2 * history[0].loss
