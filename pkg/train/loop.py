"""Denoising pretraining loop.

Every random draw is keyed by (seed, epoch, dataset index), so the epoch
order, the residue segments and the noise never depend on batching or on
how far the preprocessing thread has run ahead.
"""
import contextlib
import functools
import logging
import queue
import threading
import time
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from autodiff import Tape, add, index, mul
from blockgraph.batching import collate, plan_batches
from blockgraph.graph import retype_edges
from blockgraph.segment import segment_graph
from denoise.losses import denoising_loss
from denoise.perturb import perturb
from errors import TrainingError
from network.backbone import predict_forces
from network.params import ModelParams
from train.optim import AdamState, adam_step, clip_global_norm
from train.schedule import cosine_lr

logger = logging.getLogger(__name__)

PREFETCH_DEPTH = 2
PREFETCH_THREAD = "ept-prefetch"
SEGMENT_STREAM = 0
NOISE_STREAM = 1


@dataclass
class TrainState:
    params: ModelParams
    optimizer: AdamState
    step: int = 0
    epoch: int = 0

    @classmethod
    def fresh(cls, config):
        params = ModelParams.initialize(config.model, np.random.default_rng(config.train.seed))
        return cls(params=params, optimizer=AdamState.zeros(params))


@dataclass
class BatchLoss:
    total: object
    translation: float
    rotation: float


@dataclass
class StepResult:
    loss: float
    loss_T: float
    loss_R: float
    grad_norm: float
    clipped: bool


@dataclass
class EpochMetrics:
    epoch: int
    steps: int
    loss: float
    loss_T: float
    loss_R: float


@dataclass
class EpochPlan:
    order: np.ndarray
    graphs: list
    groups: list


def plan_epoch(graphs, train_cfg, epoch):
    """Visiting order, augmented graphs and batch groups for one epoch."""
    order = np.arange(len(graphs))
    if train_cfg.shuffle:
        order = np.random.default_rng([train_cfg.seed, epoch]).permutation(len(graphs))
    augmented = [
        segment_graph(graphs[i], train_cfg.segment_k,
                      np.random.default_rng([train_cfg.seed, epoch, int(i), SEGMENT_STREAM]))
        for i in order
    ]
    groups = plan_batches([g.n_atoms for g in augmented], train_cfg.max_vertices)
    return EpochPlan(order=order, graphs=augmented, groups=groups)


def total_steps(graphs, train_cfg):
    return sum(len(plan_epoch(graphs, train_cfg, e).groups) for e in range(train_cfg.epochs))


def noise_rng(train_cfg, epoch, sample_index):
    return np.random.default_rng([train_cfg.seed, epoch, int(sample_index), NOISE_STREAM])


def perturb_graph(graph, train_cfg, rng, mode=None):
    return perturb(mode or train_cfg.denoise_mode, graph.coords, graph.block_of,
                   train_cfg.sigma_t, train_cfg.sigma_r, rng)


def batch_loss(p, graphs, samples, config):
    """Mean of the per-graph denoising losses, forces from one batched forward pass."""
    noisy = [retype_edges(g, s.perturbed, config.graph) for g, s in zip(graphs, samples)]
    _, _, forces = predict_forces(collate(noisy), p, config.model)
    parts = [denoising_loss(index(forces, (k, slice(0, g.n_atoms))), s)
             for k, (g, s) in enumerate(zip(graphs, samples))]
    scale = 1.0 / len(parts)
    total = mul(functools.reduce(add, [part.total for part in parts]), scale)
    return BatchLoss(total=total,
                     translation=sum(part.translation for part in parts) * scale,
                     rotation=sum(part.rotation for part in parts) * scale)


def train_step(state, graphs, samples, config, lr, label="batch"):
    """Forward, backward, clip and one Adam update; mutates ``state``."""
    with Tape() as tape:
        p = state.params.tensors(requires_grad=True)
        loss = batch_loss(p, graphs, samples, config)
    value = loss.total.item()
    if not np.isfinite(value):
        raise TrainingError(f"non-finite loss {value} in {label}")
    names = list(p)
    grads = dict(zip(names, tape.gradient(loss.total, [p[n] for n in names])))
    grads, norm, clipped = clip_global_norm(grads, config.train.grad_clip)
    if clipped:
        logger.info("step %d: gradient norm %.4g clipped to %.4g", state.step, norm, config.train.grad_clip)
    state.params, state.optimizer = adam_step(state.params, grads, state.optimizer, lr)
    state.step += 1
    return StepResult(loss=value, loss_T=loss.translation, loss_R=loss.rotation,
                      grad_norm=norm, clipped=clipped)


def prefetch(produce, count, depth=PREFETCH_DEPTH, poll=0.1):
    """Yield ``produce(0..count-1)`` while a worker thread stays up to ``depth`` items ahead.

    Closing the generator early stops the worker within ``poll`` seconds.
    """
    slots = queue.Queue(maxsize=depth)
    stop = threading.Event()

    def offer(item):
        while not stop.is_set():
            try:
                slots.put(item, timeout=poll)
                return True
            except queue.Full:
                continue
        return False

    def worker():
        try:
            for i in range(count):
                if stop.is_set() or not offer((produce(i), None)):
                    return
        except Exception as e:  # re-raised in the consumer
            offer((None, e))

    threading.Thread(target=worker, name=PREFETCH_THREAD, daemon=True).start()
    try:
        for _ in range(count):
            item, error = slots.get()
            if error is not None:
                raise error
            yield item
    finally:
        stop.set()


def pretrain_epoch(graphs, state, config, steps_total, writer=None, progress=False):
    """One pass over ``graphs``; ``state.epoch`` selects the rng streams and is advanced."""
    train_cfg = config.train
    epoch = state.epoch
    plan = plan_epoch(graphs, train_cfg, epoch)

    def prepare(b):
        members = plan.groups[b]
        chosen = [plan.graphs[j] for j in members]
        samples = [perturb_graph(g, train_cfg, noise_rng(train_cfg, epoch, plan.order[j]))
                   for g, j in zip(chosen, members)]
        return chosen, samples

    totals = np.zeros(3)
    with contextlib.closing(prefetch(prepare, len(plan.groups))) as batches:
        for b, (chosen, samples) in enumerate(tqdm(batches, total=len(plan.groups),
                                                    desc=f"epoch {epoch}", disable=not progress)):
            lr = cosine_lr(state.step, max(steps_total, state.step), train_cfg.lr, train_cfg.min_lr)
            started = time.perf_counter()
            result = train_step(state, chosen, samples, config, lr,
                                label=f"epoch {epoch} batch {b} ({', '.join(g.name or '?' for g in chosen)})")
            totals += (result.loss, result.loss_T, result.loss_R)
            if writer is not None:
                writer.write({"step": state.step, "lr": lr, "loss": result.loss, "loss_T": result.loss_T,
                              "loss_R": result.loss_R, "grad_norm": result.grad_norm,
                              "wall_ms": round(1000.0 * (time.perf_counter() - started), 3)})

    count = len(plan.groups)
    state.epoch += 1
    means = totals / max(count, 1)
    metrics = EpochMetrics(epoch=epoch, steps=count, loss=means[0], loss_T=means[1], loss_R=means[2])
    logger.info("epoch %d: %d steps, loss %.6g (T %.6g, R %.6g)",
                epoch, count, metrics.loss, metrics.loss_T, metrics.loss_R)
    return metrics


def pretrain(graphs, config, state=None, writer=None, on_checkpoint=None, progress=False):
    """Run epochs ``state.epoch .. train.epochs - 1``.

    ``on_checkpoint(label, state)`` is called every ``checkpoint_every``
    epochs with label ``epoch_NNNN`` and once at the end with ``final``.
    """
    if not graphs:
        raise TrainingError("no training graphs")
    state = state or TrainState.fresh(config)
    steps_total = total_steps(graphs, config.train)
    history = []
    while state.epoch < config.train.epochs:
        history.append(pretrain_epoch(graphs, state, config, steps_total, writer, progress))
        if on_checkpoint is None:
            continue
        if state.epoch == config.train.epochs:
            on_checkpoint("final", state)
        elif state.epoch % config.train.checkpoint_every == 0:
            on_checkpoint(f"epoch_{state.epoch:04d}", state)
    return state, history
