from dataclasses import dataclass

import numpy as np

from autodiff import Tensor, add, as_tensor, div, mean, mul, segment_sum, sub, sum_, take
from denoise.geometry import block_counts, block_mean
from denoise.rigid import angular_acceleration, block_torque, inertia
from errors import ContractError


@dataclass
class LossBreakdown:
    """``total`` stays on the tape; the components are plain floats for logging."""
    total: Tensor
    translation: float = 0.0
    rotation: float = 0.0
    vacuous: bool = False

    @property
    def value(self):
        return self.total.item()


def _check(forces, sample):
    if not sample.sigma_t > 0:
        raise ContractError("denoising losses need sigma_t > 0")
    if tuple(forces.shape) != sample.perturbed.shape:
        raise ContractError(f"forces {tuple(forces.shape)} do not match coordinates {sample.perturbed.shape}")


def _squared_norms(diff):
    return sum_(mul(diff, diff), axis=1)


def loss_atom(forces, sample):
    """mean_i |F'_i - (Z'_i - Z_i)/σ_t²|²"""
    forces = as_tensor(forces)
    _check(forces, sample)
    target = (sample.perturbed - sample.clean) / sample.sigma_t ** 2
    return mean(_squared_norms(sub(forces, target)))


def _clean_centers(sample, m):
    if sample.block_centers is not None:
        return sample.block_centers
    return block_mean(sample.clean, sample.block_of, m)


def loss_block_T(forces, sample):
    """mean_b |μ_b(F') - (μ_b(Z') - Z_b)/σ_t²|²"""
    forces = as_tensor(forces)
    _check(forces, sample)
    counts = block_counts(sample.block_of)
    m = len(counts)
    mean_force = div(segment_sum(forces, sample.block_of, m), counts[:, None].astype(np.float64))
    target = (block_mean(sample.perturbed, sample.block_of, m) - _clean_centers(sample, m)) / sample.sigma_t ** 2
    return mean(_squared_norms(sub(mean_force, target)))


def loss_block_R(forces, sample):
    """Returns ``(loss, vacuous)``: mean over blocks with >= 2 atoms of |α_b - score(ω_b)|².

    The loss is vacuous (a constant zero) when no block is eligible or the
    sample carries no rotation noise.
    """
    forces = as_tensor(forces)
    _check(forces, sample)
    if sample.omega is None:
        raise ContractError(f"a {sample.mode!r} sample carries no block rotations")
    counts = block_counts(sample.block_of)
    m = len(counts)
    eligible = np.nonzero(counts >= 2)[0]
    if len(eligible) == 0 or sample.sigma_r == 0:
        return Tensor(0.0), True
    torque = block_torque(forces, sample.perturbed, sample.block_of, m)
    alpha = angular_acceleration(torque, inertia(sample.perturbed, sample.block_of, m))
    diff = sub(take(alpha, eligible), sample.score[eligible])
    return mean(_squared_norms(diff)), False


def loss_block_C(forces, sample):
    translation = loss_block_T(forces, sample)
    rotation, vacuous = loss_block_R(forces, sample)
    return LossBreakdown(total=add(translation, rotation), translation=translation.item(),
                         rotation=rotation.item(), vacuous=vacuous)


def denoising_loss(forces, sample):
    """Loss for the sample's own perturbation mode."""
    if sample.mode == "atom":
        total = loss_atom(forces, sample)
        return LossBreakdown(total=total, translation=total.item(), vacuous=True)
    if sample.mode == "block-T":
        total = loss_block_T(forces, sample)
        return LossBreakdown(total=total, translation=total.item(), vacuous=True)
    if sample.mode == "block-C":
        return loss_block_C(forces, sample)
    raise ContractError(f"unknown noise mode {sample.mode!r}")
