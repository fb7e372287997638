from denoise.geometry import block_broadcast, block_mean, center_project, random_rotation, rotation_matrix, skew
from denoise.igso3 import IgSo3Table, igso3_build, igso3_sample, igso3_score, load_table, save_table, table_for
from denoise.losses import LossBreakdown, denoising_loss, loss_atom, loss_block_C, loss_block_R, loss_block_T
from denoise.perturb import (
    apply_noise,
    perturb,
    perturb_atom,
    perturb_block_complete,
    perturb_block_translation,
    rotate_sample,
)
from denoise.rigid import angular_acceleration, block_torque, inertia, pseudo_inverse, rigid_state

__all__ = [
    "IgSo3Table", "LossBreakdown", "angular_acceleration", "apply_noise", "block_broadcast",
    "block_mean", "block_torque", "center_project", "denoising_loss", "igso3_build",
    "igso3_sample", "igso3_score", "inertia", "load_table", "loss_atom", "loss_block_C",
    "loss_block_R", "loss_block_T", "perturb", "perturb_atom", "perturb_block_complete",
    "perturb_block_translation", "pseudo_inverse", "random_rotation", "rigid_state",
    "rotate_sample", "rotation_matrix", "save_table", "skew", "table_for",
]
