"""Noise kernels for the three denoising modes.

Every kernel centers the clean input first and records all drawn noise on
the returned NoiseSample, so ``apply_noise`` rebuilds Z' bit-exactly.
Random draws happen in a fixed order: translation noise, then rotation
angle, then rotation axis.
"""
from dataclasses import replace

import numpy as np

from config import DENOISE_MODES
from denoise.geometry import block_broadcast, block_counts, block_mean, center_project, rotate_rows, rotation_matrix
from denoise.igso3 import igso3_sample, igso3_score, table_for
from models import NoiseSample


def decompose(clean, block_of):
    """Block centers Z_b and relative coordinates Z_r of centered coordinates."""
    centers = block_mean(clean, block_of)
    return centers, clean - block_broadcast(centers, block_of)


def rotate_blocks(relative, block_of, omega):
    """Apply each block's rotation exp(ω_b) to its atoms' relative coordinates."""
    rotated = relative.copy()
    if omega is None:
        return rotated
    counts = block_counts(block_of, len(omega))
    moving = (np.linalg.norm(omega, axis=1) > 0) & (counts > 1)
    if not moving.any():
        return rotated
    atoms = moving[block_of]
    q = rotation_matrix(omega)
    rotated[atoms] = rotate_rows(q[block_of[atoms]], relative[atoms])
    return rotated


def apply_noise(sample):
    """Z' from the clean coordinates and the noise stored on ``sample``."""
    if sample.mode == "atom":
        return center_project(sample.clean + sample.sigma_t * sample.eps_atom)
    moved = block_broadcast(sample.block_centers + sample.sigma_t * sample.eps_block, sample.block_of)
    return center_project(moved + rotate_blocks(sample.relative, sample.block_of, sample.omega))


def _finish(sample):
    return replace(sample, perturbed=apply_noise(sample))


def perturb_atom(coords, sigma_t, rng, block_of=None):
    """Z' = C(Z + σ_t ε), ε standard normal per atom coordinate."""
    clean = center_project(coords)
    n = len(clean)
    block_of = np.arange(n) if block_of is None else np.asarray(block_of)
    eps = rng.standard_normal((n, 3))
    return _finish(NoiseSample(mode="atom", perturbed=clean, clean=clean, block_of=block_of,
                               sigma_t=float(sigma_t), eps_atom=eps))


def perturb_block_translation(coords, block_of, sigma_t, rng):
    """Z' = C(Z + σ_t g_b(ε_b)), one Gaussian shift per block."""
    block_of = np.asarray(block_of)
    clean = center_project(coords)
    centers, relative = decompose(clean, block_of)
    eps = rng.standard_normal((len(centers), 3))
    return _finish(NoiseSample(mode="block-T", perturbed=clean, clean=clean, block_of=block_of,
                               sigma_t=float(sigma_t), eps_block=eps,
                               block_centers=centers, relative=relative))


def perturb_block_complete(coords, block_of, sigma_t, sigma_r, rng, omega=None):
    """Z' = C(g_b(Z_b + σ_t ε_b) + Q_b Z_r) with Q_b = exp(ω_b), ω_b ~ IGSO(3)(σ_r).

    ``omega`` fixes the rotations instead of sampling them.
    """
    block_of = np.asarray(block_of)
    clean = center_project(coords)
    centers, relative = decompose(clean, block_of)
    m = len(centers)
    eps = rng.standard_normal((m, 3))
    if omega is not None:
        omega = np.asarray(omega, dtype=np.float64).reshape(m, 3)
        score = igso3_score(table_for(sigma_r), omega) if sigma_r > 0 else np.zeros((m, 3))
    elif sigma_r > 0:
        table = table_for(sigma_r)
        omega = igso3_sample(table, rng, m)
        score = igso3_score(table, omega)
    else:
        omega, score = np.zeros((m, 3)), np.zeros((m, 3))
    return _finish(NoiseSample(mode="block-C", perturbed=clean, clean=clean, block_of=block_of,
                               sigma_t=float(sigma_t), sigma_r=float(sigma_r), eps_block=eps,
                               omega=omega, block_centers=centers, relative=relative, score=score))


def perturb(mode, coords, block_of, sigma_t, sigma_r, rng):
    if mode == "atom":
        return perturb_atom(coords, sigma_t, rng, block_of)
    if mode == "block-T":
        return perturb_block_translation(coords, block_of, sigma_t, rng)
    if mode == "block-C":
        return perturb_block_complete(coords, block_of, sigma_t, sigma_r, rng)
    raise ValueError(f"invalid denoise mode {mode!r}. Use one of: {', '.join(DENOISE_MODES)}")


def rotate_sample(sample, rotation):
    """The same sample seen in a globally rotated frame."""
    def turn(a):
        return None if a is None else a @ rotation.T
    return replace(sample, perturbed=turn(sample.perturbed), clean=turn(sample.clean),
                   eps_atom=turn(sample.eps_atom), eps_block=turn(sample.eps_block),
                   omega=turn(sample.omega), block_centers=turn(sample.block_centers),
                   relative=turn(sample.relative), score=turn(sample.score))
