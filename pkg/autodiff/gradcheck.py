"""Central finite-difference checks for tape gradients."""
from dataclasses import dataclass

import numpy as np

from autodiff.tensor import Tape, Tensor, grad


@dataclass(frozen=True)
class EntryCheck:
    name: str
    index: tuple
    analytic: float
    numeric: float
    rel_error: float


def relative_error(analytic, numeric, loss_scale, floor=1e-3):
    """|a - n| over the larger of |a|, |n| and ``floor * max(1, |L|)``.

    The floor keeps entries whose true gradient is near zero from being judged
    on finite-difference noise alone.
    """
    denom = max(abs(analytic), abs(numeric), floor * max(1.0, abs(loss_scale)))
    return abs(analytic - numeric) / denom


def _leaves(arrays):
    return {name: Tensor(value, requires_grad=True, name=name) for name, value in arrays.items()}


def evaluate(loss_fn, arrays):
    return loss_fn(_leaves(arrays)).item()


def analytic_gradients(loss_fn, arrays):
    with Tape() as tape:
        leaves = _leaves(arrays)
        loss = loss_fn(leaves)
    names = list(leaves)
    grads = grad(tape, loss, [leaves[n] for n in names])
    return loss.item(), dict(zip(names, grads))


def pick_entries(grad_array, count, rng):
    """The largest-magnitude entries first, then random ones, without repeats.

    ``count=None`` selects every entry.
    """
    flat = np.abs(grad_array).ravel()
    if flat.size == 0:
        return []
    if count is None:
        return list(np.ndindex(grad_array.shape))
    order = list(np.argsort(-flat, kind="stable")[: max(count - 1, 1)])
    while len(order) < min(count, flat.size):
        candidate = int(rng.integers(flat.size))
        if candidate not in order:
            order.append(candidate)
    return [np.unravel_index(int(k), grad_array.shape) for k in order]


def compare_gradients(loss_fn, arrays, step=1e-6, entries_per_tensor=3, rng=None, floor=1e-3):
    """Compare tape gradients of ``loss_fn`` against central differences.

    ``loss_fn`` maps ``{name: Tensor}`` to a scalar Tensor; ``arrays`` gives the
    point of evaluation. ``entries_per_tensor=None`` compares every entry.
    Returns one ``EntryCheck`` per compared entry.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    arrays = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}
    loss, grads = analytic_gradients(loss_fn, arrays)
    results = []
    for name, g in grads.items():
        for idx in pick_entries(g, entries_per_tensor, rng):
            base = arrays[name][idx]
            arrays[name][idx] = base + step
            up = evaluate(loss_fn, arrays)
            arrays[name][idx] = base - step
            down = evaluate(loss_fn, arrays)
            arrays[name][idx] = base
            numeric = (up - down) / (2.0 * step)
            analytic = float(g[idx])
            results.append(EntryCheck(name, tuple(int(i) for i in idx), analytic, numeric,
                                      relative_error(analytic, numeric, loss, floor)))
    return results


def worst(results):
    return max(results, key=lambda r: r.rel_error) if results else None
