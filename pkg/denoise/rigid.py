"""Rigid-body response of each block to per-atom pseudo-forces.

Torque and angular acceleration accept autodiff Tensors for the forces so
the rotation loss can be differentiated; inertia only depends on coordinates.
"""
import numpy as np

from autodiff import as_tensor, cross, matmul, reshape, segment_sum
from denoise.geometry import block_broadcast, block_counts, block_mean
from models import BlockRigidState

PINV_CUTOFF = 1e-10


def relative_positions(coords, block_of, n_blocks=None):
    """u_j = z_j - center of its block."""
    coords = np.asarray(coords, dtype=np.float64)
    centers = block_mean(coords, block_of, n_blocks)
    return coords - block_broadcast(centers, block_of)


def block_torque(forces, coords, block_of, n_blocks=None):
    """M'_b = Σ_{j in b} u_j × f'_j as a Tensor ``(M, 3)``."""
    m = len(block_counts(block_of, n_blocks))
    u = relative_positions(coords, block_of, m)
    return segment_sum(cross(u, as_tensor(forces)), block_of, m)


def inertia(coords, block_of, n_blocks=None):
    """I_b = Σ_j (|u_j|² Id - u_j u_jᵀ), shape ``(M, 3, 3)``."""
    m = len(block_counts(block_of, n_blocks))
    u = relative_positions(coords, block_of, m)
    per_atom = (u * u).sum(axis=1)[:, None, None] * np.eye(3) - u[:, :, None] * u[:, None, :]
    out = np.zeros((m, 3, 3))
    np.add.at(out, block_of, per_atom)
    return out


def pseudo_inverse(matrices):
    """Symmetric pseudo-inverse; eigenvalues at or below 1e-10·trace count as zero."""
    w, vecs = np.linalg.eigh(matrices)
    cutoff = PINV_CUTOFF * np.trace(matrices, axis1=-2, axis2=-1)[..., None]
    safe = np.where(w > cutoff, w, 1.0)
    inv_w = np.where(w > cutoff, 1.0 / safe, 0.0)
    return (vecs * inv_w[..., None, :]) @ np.swapaxes(vecs, -1, -2)


def angular_acceleration(torque, inertia_matrices):
    """α_b = I_b⁺ M'_b; ``torque`` may be a Tensor ``(M, 3)``."""
    torque = as_tensor(torque)
    m = torque.shape[0]
    alpha = matmul(pseudo_inverse(inertia_matrices), reshape(torque, (m, 3, 1)))
    return reshape(alpha, (m, 3))


def rigid_state(forces, coords, block_of, n_blocks=None):
    m = len(block_counts(block_of, n_blocks))
    torque = block_torque(forces, coords, block_of, m)
    inertia_matrices = inertia(coords, block_of, m)
    alpha = angular_acceleration(torque, inertia_matrices)
    return BlockRigidState(torque=torque.numpy(), inertia=inertia_matrices,
                           angular_acceleration=alpha.numpy(),
                           relative=relative_positions(coords, block_of, m))
