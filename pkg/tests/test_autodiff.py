import numpy as np
import pytest

from autodiff import (
    Tape,
    Tensor,
    concat,
    cross,
    exp,
    index,
    layer_norm,
    matmul,
    mean,
    norm,
    segment_sum,
    silu,
    softmax_rows,
    sum_,
    take,
)
from autodiff.gradcheck import compare_gradients, relative_error, worst
from errors import ContractError, DimensionError, SegmentIndexError


def test_product_rule_and_broadcast():
    with Tape() as tape:
        a = Tensor([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
        b = Tensor([10.0, 20.0], requires_grad=True)
        out = sum_(a * b + a)
    ga, gb = tape.gradient(out, [a, b])
    np.testing.assert_array_equal(ga, [[11.0, 21.0], [11.0, 21.0]])
    np.testing.assert_array_equal(gb, [4.0, 6.0])


def test_unreached_leaf_gets_zeros():
    with Tape() as tape:
        a = Tensor([1.0, 2.0], requires_grad=True)
        unused = Tensor(np.ones((2, 3)), requires_grad=True)
        out = sum_(a * a)
    ga, gu = tape.gradient(out, [a, unused])
    np.testing.assert_array_equal(ga, [2.0, 4.0])
    np.testing.assert_array_equal(gu, np.zeros((2, 3)))


def test_gradient_dict_without_wrt():
    with Tape() as tape:
        a = Tensor(3.0, requires_grad=True)
        out = exp(a)
    grads = tape.gradient(out)
    assert list(grads) == [a]
    assert grads[a] == pytest.approx(np.exp(3.0))


def test_operations_outside_a_tape_are_not_recorded():
    a = Tensor([1.0, 2.0], requires_grad=True)
    out = sum_(a * a)
    assert not out.requires_grad
    with Tape() as tape:
        pass
    with pytest.raises(ContractError):
        tape.gradient(out)


def test_non_scalar_output_is_rejected():
    with Tape() as tape:
        a = Tensor([1.0, 2.0], requires_grad=True)
        out = a * 2.0
    with pytest.raises(ContractError, match="scalar"):
        tape.gradient(out)


def test_tensors_are_read_only():
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_segment_sum_rejects_out_of_range_ids():
    with pytest.raises(SegmentIndexError, match="segment id 3"):
        segment_sum(Tensor(np.ones((3, 2))), [0, 1, 3], 3)


def test_segment_sum_and_take_accumulate():
    with Tape() as tape:
        x = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
        gathered = take(x, [0, 0, 2])
        out = sum_(segment_sum(gathered, [0, 1, 1], 2))
    (gx,) = tape.gradient(out, [x])
    np.testing.assert_array_equal(gx, [[2.0, 2.0], [0.0, 0.0], [1.0, 1.0]])


def test_fancy_index_accumulates_repeats():
    with Tape() as tape:
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        out = sum_(index(x, np.array([0, 0, 2])))
    (gx,) = tape.gradient(out, [x])
    np.testing.assert_array_equal(gx, [2.0, 0.0, 1.0])


def test_norm_gradient_at_zero_is_zero():
    with Tape() as tape:
        x = Tensor(np.zeros((2, 3)), requires_grad=True)
        out = sum_(norm(x, axis=-1))
    (gx,) = tape.gradient(out, [x])
    np.testing.assert_array_equal(gx, np.zeros((2, 3)))


def test_softmax_rows_all_masked_row_is_zero():
    x = Tensor([[0.0, 1.0], [-np.inf, -np.inf]])
    y = softmax_rows(x).data
    np.testing.assert_allclose(y[0].sum(), 1.0)
    np.testing.assert_array_equal(y[1], [0.0, 0.0])


def test_cross_requires_three_components():
    with pytest.raises(DimensionError):
        cross(Tensor(np.ones((2, 2))), Tensor(np.ones((2, 2))))


def test_composite_gradients_match_central_differences(rng):
    arrays = {
        "x": rng.standard_normal((4, 5)),
        "w": rng.standard_normal((5, 3)),
        "gamma": 1.0 + 0.1 * rng.standard_normal(3),
        "beta": 0.1 * rng.standard_normal(3),
        "u": rng.standard_normal((4, 3)),
    }

    def loss_fn(t):
        h = layer_norm(matmul(t["x"], t["w"]), t["gamma"], t["beta"])
        mixed = concat([silu(h), softmax_rows(h)], axis=-1)
        turned = cross(t["u"], index(mixed, (slice(None), slice(0, 3))))
        return mean(norm(turned, axis=-1)) + sum_(mixed * mixed)

    results = compare_gradients(loss_fn, arrays, rng=rng)
    assert len(results) == 15
    assert worst(results).rel_error < 1e-6

    every = compare_gradients(loss_fn, arrays, entries_per_tensor=None)
    assert len(every) == sum(a.size for a in arrays.values())
    assert {r.index for r in every if r.name == "w"} == set(np.ndindex(5, 3))
    assert worst(every).rel_error < 1e-6


def test_relative_error_floor():
    assert relative_error(0.0, 0.0, 1.0) == 0.0
    assert relative_error(1e-9, 0.0, 1.0) == pytest.approx(1e-6)
