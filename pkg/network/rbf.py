import numpy as np


def rbf_centers(count, delta_max):
    return np.linspace(0.0, delta_max, count)


def rbf_width(count, delta_max):
    return delta_max / (count - 1) if count > 1 else delta_max


def rbf_expand(d, count, delta_max):
    """Gaussian basis on evenly spaced centers over ``[0, delta_max]``; width is the spacing."""
    d = np.asarray(d, dtype=np.float64)
    centers = rbf_centers(count, delta_max)
    width = rbf_width(count, delta_max)
    return np.exp(-((d[..., None] - centers) ** 2) / (2.0 * width * width))


def rbf_derivative(d, count, delta_max):
    d = np.asarray(d, dtype=np.float64)
    centers = rbf_centers(count, delta_max)
    width = rbf_width(count, delta_max)
    return -(d[..., None] - centers) / (width * width) * rbf_expand(d, count, delta_max)
