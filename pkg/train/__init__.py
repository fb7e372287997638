from train.checkpointing import load_training_state, save_training_state
from train.finetune import LabelScaler, atom_count_labels, evaluate_mae, finetune, finetune_loss, finetune_step
from train.loop import TrainState, batch_loss, plan_epoch, pretrain, pretrain_epoch, total_steps, train_step
from train.metrics import COLUMNS, MetricsWriter, read_metrics
from train.optim import AdamState, adam_step, clip_global_norm
from train.schedule import cosine_lr

__all__ = [
    "AdamState", "COLUMNS", "LabelScaler", "MetricsWriter", "TrainState", "adam_step",
    "atom_count_labels", "batch_loss", "clip_global_norm", "cosine_lr", "evaluate_mae",
    "finetune", "finetune_loss", "finetune_step", "load_training_state", "plan_epoch",
    "pretrain", "pretrain_epoch", "read_metrics", "save_training_state", "total_steps",
    "train_step",
]
