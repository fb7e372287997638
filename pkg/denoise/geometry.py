import numpy as np

# a centroid this close to zero (relative to the coordinate scale) is rounding noise
_CENTERED = 64.0 * np.finfo(np.float64).eps


def center_project(z):
    """C(Z) = Z - mean(Z). Inputs already centered up to rounding are returned unchanged."""
    z = np.asarray(z, dtype=np.float64)
    if len(z) == 0:
        raise ValueError("center_project needs at least one atom")
    mean = z.mean(axis=0)
    scale = np.abs(z).max(axis=0)
    mean = np.where(np.abs(mean) <= _CENTERED * scale, 0.0, mean)
    if not mean.any():
        return z.copy()
    return z - mean


def block_counts(block_of, n_blocks=None):
    m = int(block_of.max()) + 1 if n_blocks is None else n_blocks
    return np.bincount(block_of, minlength=m)


def block_mean(z, block_of, n_blocks=None):
    """mu_b: per-block average, taken about each block's first atom."""
    z = np.asarray(z, dtype=np.float64)
    counts = block_counts(block_of, n_blocks)
    first = np.zeros(len(counts), dtype=np.int64)
    first[block_of[::-1]] = np.arange(len(block_of))[::-1]
    ref = z[first]
    sums = np.zeros_like(ref)
    np.add.at(sums, block_of, z - ref[block_of])
    return ref + sums / counts[:, None]


def block_broadcast(values, block_of):
    """g_b: copy each block's row to its atoms."""
    return np.asarray(values)[block_of]


def skew(w):
    w = np.asarray(w, dtype=np.float64)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1], out[..., 0, 2] = -w[..., 2], w[..., 1]
    out[..., 1, 0], out[..., 1, 2] = w[..., 2], -w[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -w[..., 1], w[..., 0]
    return out


def rotation_matrix(omega):
    """exp(skew(omega)) in closed form; accepts ``(3,)`` or ``(M, 3)``."""
    omega = np.asarray(omega, dtype=np.float64)
    theta = np.linalg.norm(omega, axis=-1)[..., None, None]
    small = theta < 1e-4
    t2 = theta * theta
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - t2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(safe)) / (safe * safe))
    k = skew(omega)
    q = np.eye(3) + a * k + b * (k @ k)
    zero = (theta == 0.0)[..., 0, 0]
    if np.any(zero):
        q[zero] = np.eye(3)
    return q


def random_rotation(rng):
    """Uniform proper rotation from a QR decomposition with sign fix."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rotate_rows(rotations, vectors):
    """Apply per-row rotations ``(K, 3, 3)`` to rows ``(K, 3)``."""
    return np.einsum("kij,kj->ki", rotations, vectors)
