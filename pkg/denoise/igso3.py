"""Isotropic Gaussian on SO(3): angle density tables, sampling and score.

The angle density is the truncated series

    f(θ) = (1 - cos θ)/π · Σ_l (2l+1) exp(-l(l+1)σ²) sin((l+½)θ) / sin(θ/2)

tabulated on a fixed grid over [0, π]. Tables are immutable once built and
can be cached to disk in the IGS3 format (magic, σ f64, grid size u32, then
grid / f / cdf / score as little-endian f64).
"""
import functools
import logging
import os
import struct
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from errors import DomainError, ParseError, PrecisionError

logger = logging.getLogger(__name__)

GRID_SIZE = 2048
MAX_TERMS = 5000
TRUNCATION = 1e-12
SMALL_SIGMA = 0.02
MAGIC = b"IGS3"
_CHUNK = 256
_TINY = 1e-300


@dataclass(frozen=True)
class IgSo3Table:
    sigma: float
    grid: np.ndarray
    density: np.ndarray
    cdf: np.ndarray
    score: np.ndarray
    terms: int = 0
    approximate: bool = False

    def __post_init__(self):
        for name in ("grid", "density", "cdf", "score"):
            getattr(self, name).setflags(write=False)

    @property
    def mass(self):
        return float(self.cdf[-1])


def series_terms(sigma):
    """Number of series terms: stop once (2l+1)² e^{-l(l+1)σ²} < 1e-12 of the running θ=0 sum."""
    l = np.arange(MAX_TERMS + 1, dtype=np.float64)
    envelope = (2 * l + 1) ** 2 * np.exp(-l * (l + 1) * sigma * sigma)
    partial = np.cumsum(envelope)
    below = np.nonzero(envelope[1:] < TRUNCATION * partial[:-1])[0]
    if len(below) == 0:
        raise PrecisionError(
            f"IGSO(3) series for sigma_r={sigma} needs more than {MAX_TERMS} terms; "
            f"use the Gaussian-angle approximation (approximate=True) for sigma_r < {SMALL_SIGMA}"
        )
    return int(below[0]) + 1


def series(theta, sigma, terms=None):
    """Σ_l (2l+1) e^{-l(l+1)σ²} sin((l+½)θ)/sin(θ/2); θ = 0 uses the limit Σ (2l+1)²."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    terms = series_terms(sigma) if terms is None else terms
    zero = theta == 0.0
    half = np.sin(np.where(zero, 1.0, theta) / 2.0)
    total = np.zeros_like(theta)
    for start in range(0, terms, _CHUNK):
        l = np.arange(start, min(start + _CHUNK, terms), dtype=np.float64)[:, None]
        weight = (2 * l + 1) * np.exp(-l * (l + 1) * sigma * sigma)
        ratio = np.where(zero, 2 * l + 1, np.sin((l + 0.5) * theta) / half)
        total += (weight * ratio).sum(axis=0)
    return total


def haar_density(theta):
    return (1.0 - np.cos(theta)) / np.pi


def _gaussian_log_series(grid, sigma):
    # log of θ²e^{-θ²/4σ²} / (1 - cos θ), with the θ → 0 limit log 2
    safe = np.where(grid == 0.0, 1.0, grid)
    ratio = np.where(grid == 0.0, 2.0, safe * safe / (1.0 - np.cos(safe)))
    return np.log(ratio) - grid * grid / (4.0 * sigma * sigma)


def igso3_build(sigma, grid_size=GRID_SIZE, approximate=False):
    """Tabulate density, CDF and score for rotation scale ``sigma``.

    ``approximate`` swaps the series for f(θ) ∝ θ² exp(-θ²/(4σ²)), the
    fallback for σ below ~0.02 where the series needs too many terms.
    """
    sigma = float(sigma)
    if not sigma > 0:
        raise ValueError(f"sigma_r must be positive, got {sigma}")
    grid = np.linspace(0.0, np.pi, grid_size)
    if approximate:
        terms = 0
        log_series = _gaussian_log_series(grid, sigma)
        raw = np.exp(log_series) * haar_density(grid)
        norm = trapezoid(raw, grid)
        density = raw / norm
        log_series = log_series - np.log(norm)
    else:
        terms = series_terms(sigma)
        values = series(grid, sigma, terms)
        density = np.maximum(values * haar_density(grid), 0.0)
        log_series = np.log(np.maximum(values, _TINY))
        logger.debug("IGSO(3) sigma_r=%g truncated at %d terms", sigma, terms)
    density[0] = 0.0
    score = np.gradient(log_series, grid)
    score[0] = 0.0
    cdf = cumulative_trapezoid(density, grid, initial=0.0)
    return IgSo3Table(sigma=sigma, grid=grid, density=density, cdf=cdf, score=score,
                      terms=terms, approximate=approximate)


@functools.lru_cache(maxsize=16)
def cached_table(sigma, approximate=False):
    return igso3_build(sigma, approximate=approximate)


def table_for(sigma):
    """Shared table for ``sigma``, switching to the approximation below SMALL_SIGMA."""
    return cached_table(float(sigma), approximate=float(sigma) < SMALL_SIGMA)


def sample_angles(table, rng, size):
    u = rng.random(size) * table.cdf[-1]
    return np.interp(u, table.cdf, table.grid)


def igso3_sample(table, rng, size=None):
    """Axis-angle draws ``(3,)`` or ``(size, 3)``: θ by inverse CDF, axis uniform on the sphere."""
    count = 1 if size is None else int(size)
    theta = sample_angles(table, rng, count)
    axis = rng.standard_normal((count, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    omega = theta[:, None] * axis
    return omega[0] if size is None else omega


def angle_score(table, theta):
    return np.interp(theta, table.grid, table.score)


def igso3_score(table, omega):
    """s(|ω|)·ω/|ω|; zero at ω = 0. Accepts ``(3,)`` or ``(M, 3)``."""
    omega = np.asarray(omega, dtype=np.float64)
    theta = np.linalg.norm(omega, axis=-1)
    if np.any(theta > np.pi + 1e-12):
        raise DomainError(f"rotation angle {float(np.max(theta)):.6g} exceeds pi")
    safe = np.where(theta == 0.0, 1.0, theta)
    scale = np.where(theta == 0.0, 0.0, angle_score(table, np.minimum(theta, np.pi)) / safe)
    return omega * scale[..., None]


def save_table(path, table):
    header = MAGIC + struct.pack("<dI", table.sigma, len(table.grid))
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                    for a in (table.grid, table.density, table.cdf, table.score))
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header + body)
    os.replace(tmp, path)


def load_table(path):
    with open(path, "rb") as fh:
        data = fh.read()
    head = 4 + struct.calcsize("<dI")
    if len(data) < head or data[:4] != MAGIC:
        raise ParseError("not an IGS3 table", source=str(path))
    sigma, n = struct.unpack("<dI", data[4:head])
    if len(data) != head + 4 * 8 * n:
        raise ParseError(f"IGS3 payload size does not match grid size {n}", source=str(path))
    arrays = np.frombuffer(data[head:], dtype="<f8").astype(np.float64).reshape(4, n)
    return IgSo3Table(sigma=sigma, grid=arrays[0].copy(), density=arrays[1].copy(),
                      cdf=arrays[2].copy(), score=arrays[3].copy())
