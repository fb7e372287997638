from autodiff.tensor import (
    Tape,
    Tensor,
    abs_,
    add,
    as_tensor,
    clamp_min,
    concat,
    cross,
    current_tape,
    div,
    exp,
    grad,
    index,
    layer_norm,
    matmul,
    mean,
    mul,
    neg,
    norm,
    reshape,
    segment_sum,
    silu,
    softmax_rows,
    sub,
    sum_,
    take,
    transpose,
)

__all__ = [
    "Tape", "Tensor", "abs_", "add", "as_tensor", "clamp_min", "concat", "cross",
    "current_tape", "div", "exp", "grad", "index", "layer_norm", "matmul", "mean",
    "mul", "neg", "norm", "reshape", "segment_sum", "silu", "softmax_rows", "sub",
    "sum_", "take", "transpose",
]
