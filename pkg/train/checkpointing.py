import logging

import numpy as np

from errors import CheckpointError
from network.checkpoint import load_checkpoint, save_checkpoint
from train.loop import TrainState
from train.optim import AdamState

logger = logging.getLogger(__name__)


def save_training_state(path, state, config):
    """Parameters, Adam moments and the step/epoch counters in one EPT1 file."""
    extra = state.optimizer.to_extra()
    extra["state.step"] = np.array(float(state.step))
    extra["state.epoch"] = np.array(float(state.epoch))
    save_checkpoint(path, state.params, config, extra)


def load_training_state(path, expected=None, fresh_optimizer=False):
    """Returns ``(TrainState, RunConfig)``.

    ``fresh_optimizer`` starts from zero moments and counters, for
    finetuning from a pretraining checkpoint.
    """
    ckpt = load_checkpoint(path, expected)
    if fresh_optimizer:
        return TrainState(params=ckpt.params, optimizer=AdamState.zeros(ckpt.params)), ckpt.config
    try:
        step = int(ckpt.extra["state.step"])
        epoch = int(ckpt.extra["state.epoch"])
    except KeyError:
        raise CheckpointError(f"{path}: no training counters; load with fresh_optimizer=True") from None
    optimizer = AdamState.from_extra(ckpt.extra, ckpt.params)
    logger.info("resuming from %s at step %d, epoch %d", path, step, epoch)
    return TrainState(params=ckpt.params, optimizer=optimizer, step=step, epoch=epoch), ckpt.config
