"""Property finetuning with the noisy-node auxiliary loss.

The objective per graph is |prediction - label| + λ·L_block-C, the second
term on a freshly perturbed copy of the same graph.
"""
import logging
import time
from dataclasses import dataclass

import numpy as np

from autodiff import Tape, abs_, add, index, mul, reshape, sub
from blockgraph.graph import retype_edges
from denoise.losses import denoising_loss
from denoise.perturb import perturb
from errors import TrainingError
from network.backbone import predict_forces, predict_property
from train.loop import TrainState
from train.optim import adam_step, clip_global_norm
from train.schedule import cosine_lr

logger = logging.getLogger(__name__)

AUX_MODE = "block-C"
FINETUNE_STREAM = 2


@dataclass(frozen=True)
class LabelScaler:
    """Affine label normalisation fitted on training labels."""
    center: float = 0.0
    scale: float = 1.0

    @classmethod
    def fit(cls, labels, mode="none"):
        labels = np.asarray(labels, dtype=np.float64)
        if mode == "none" or len(labels) == 0:
            return cls()
        if mode == "std":
            center, scale = float(labels.mean()), float(labels.std())
        elif mode == "mad":
            center = float(np.median(labels))
            scale = float(np.median(np.abs(labels - center)))
        else:
            raise ValueError(f"unknown label normalisation {mode!r}")
        return cls(center=center, scale=scale if scale > 0 else 1.0)

    def normalize(self, y):
        return (y - self.center) / self.scale

    def denormalize(self, y):
        return y * self.scale + self.center


@dataclass
class FinetuneLoss:
    total: object
    mae: float
    aux: float
    prediction: float
    grad_norm: float = 0.0


def finetune_loss(p, graph, label, config, rng, scaler=LabelScaler()):
    train_cfg = config.train
    _, _, pred = predict_property(graph, p, config.model, train_cfg.head_mode)
    pred = reshape(pred, ())
    mae = abs_(sub(pred, scaler.normalize(float(label))))
    total, aux = mae, 0.0
    if train_cfg.noisy_node_weight > 0:
        sample = perturb(AUX_MODE, graph.coords, graph.block_of, train_cfg.sigma_t, train_cfg.sigma_r, rng)
        noisy = retype_edges(graph, sample.perturbed, config.graph)
        _, _, forces = predict_forces(noisy, p, config.model)
        aux_loss = denoising_loss(index(forces, (0, slice(None))), sample).total
        aux = aux_loss.item()
        total = add(mae, mul(aux_loss, train_cfg.noisy_node_weight))
    return FinetuneLoss(total=total, mae=mae.item(), aux=aux,
                        prediction=scaler.denormalize(pred.item()))


def finetune_step(state, graph, label, config, rng, lr, scaler=LabelScaler()):
    """One update on a single labelled graph; mutates ``state``."""
    with Tape() as tape:
        p = state.params.tensors(requires_grad=True)
        loss = finetune_loss(p, graph, label, config, rng, scaler)
    value = loss.total.item()
    if not np.isfinite(value):
        raise TrainingError(f"non-finite finetune loss {value} on {graph.name or 'graph'}")
    names = list(p)
    grads = dict(zip(names, tape.gradient(loss.total, [p[n] for n in names])))
    grads, norm, clipped = clip_global_norm(grads, config.train.grad_clip)
    if clipped:
        logger.info("finetune step %d: gradient norm %.4g clipped", state.step, norm)
    state.params, state.optimizer = adam_step(state.params, grads, state.optimizer, lr)
    state.step += 1
    loss.grad_norm = norm
    return loss


def atom_count_labels(graphs):
    return np.array([float(g.n_atoms) for g in graphs])


def predict_labels(params, graphs, config, scaler=LabelScaler()):
    p = params.tensors()
    return np.array([scaler.denormalize(predict_property(g, p, config.model, config.train.head_mode)[2].item())
                     for g in graphs])


def evaluate_mae(params, graphs, labels, config, scaler=LabelScaler()):
    return float(np.mean(np.abs(predict_labels(params, graphs, config, scaler) - np.asarray(labels))))


def finetune(graphs, labels, config, steps, state=None, writer=None):
    """Cycle through the labelled graphs with single-graph updates until ``state.step == steps``.

    A state restored mid-run continues the cosine schedule and the noise
    streams from its own step counter.
    """
    if not graphs:
        raise TrainingError("no finetuning graphs")
    if len(labels) != len(graphs):
        raise TrainingError(f"{len(labels)} labels for {len(graphs)} graphs")
    train_cfg = config.train
    state = state or TrainState.fresh(config)
    scaler = LabelScaler.fit(labels, train_cfg.label_norm)
    history = []
    for k in range(state.step, steps):
        i = k % len(graphs)
        lr = cosine_lr(k, steps, train_cfg.lr, train_cfg.min_lr)
        rng = np.random.default_rng([train_cfg.seed, k, FINETUNE_STREAM])
        started = time.perf_counter()
        loss = finetune_step(state, graphs[i], labels[i], config, rng, lr, scaler)
        history.append(loss.total.item())
        if writer is not None:
            writer.write({"step": state.step, "lr": lr, "loss": loss.total.item(), "loss_T": loss.mae,
                          "loss_R": loss.aux, "grad_norm": loss.grad_norm,
                          "wall_ms": round(1000.0 * (time.perf_counter() - started), 3)})
    return state, scaler, history
