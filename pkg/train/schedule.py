import math


def cosine_lr(step, total_steps, lr, min_lr):
    """min_lr + ½(lr - min_lr)(1 + cos(π·step/total_steps))."""
    if total_steps <= 0:
        return lr
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return min_lr + 0.5 * (lr - min_lr) * (1.0 + math.cos(math.pi * step / total_steps))
