import numpy as np
import pytest

from autodiff import Tape, Tensor
from denoise import (
    angular_acceleration,
    block_mean,
    block_torque,
    center_project,
    denoising_loss,
    igso3_build,
    igso3_sample,
    igso3_score,
    inertia,
    load_table,
    loss_atom,
    loss_block_C,
    loss_block_R,
    loss_block_T,
    perturb,
    perturb_atom,
    perturb_block_complete,
    perturb_block_translation,
    pseudo_inverse,
    random_rotation,
    rigid_state,
    rotate_sample,
    rotation_matrix,
    save_table,
    table_for,
)
from denoise.igso3 import series_terms
from errors import ContractError, DomainError, ParseError, PrecisionError
from network import ModelParams
from verify.checks import check_gradients, check_igso3, check_reductions, check_rigid


# ---------------------------
# Geometry
# ---------------------------

def test_centering_is_idempotent(rng):
    z = rng.uniform(-20, 20, (17, 3)) + 100.0
    once = center_project(z)
    np.testing.assert_allclose(once.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_array_equal(center_project(once), once)


def test_singleton_block_mean_is_exact(rng):
    z = rng.standard_normal((6, 3))
    np.testing.assert_array_equal(block_mean(z, np.arange(6)), z)


def test_rotation_matrix():
    np.testing.assert_array_equal(rotation_matrix(np.zeros(3)), np.eye(3))
    q = rotation_matrix(np.array([0.0, 0.0, np.pi / 2]))
    np.testing.assert_allclose(q @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], atol=1e-15)
    tiny = rotation_matrix(np.array([[1e-6, 0.0, 0.0], [0.0, 2.0, 0.0]]))
    for m in tiny:
        np.testing.assert_allclose(m.T @ m, np.eye(3), atol=1e-14)
        assert np.linalg.det(m) == pytest.approx(1.0)


def test_random_rotation_is_proper(rng):
    q = random_rotation(rng)
    np.testing.assert_allclose(q @ q.T, np.eye(3), atol=1e-14)
    assert np.linalg.det(q) == pytest.approx(1.0)


# ---------------------------
# Perturbation kernels
# ---------------------------

def test_atom_noise_is_reproducible(ethanol):
    a = perturb_atom(ethanol.coords, 0.1, np.random.default_rng(5), ethanol.block_of)
    b = perturb_atom(ethanol.coords, 0.1, np.random.default_rng(5), ethanol.block_of)
    np.testing.assert_array_equal(a.perturbed, b.perturbed)
    np.testing.assert_array_equal(a.reconstruct(), a.perturbed)
    np.testing.assert_allclose(a.perturbed.mean(axis=0), 0.0, atol=1e-12)


def test_zero_noise_returns_centered_input(ethanol, rng):
    sample = perturb_atom(ethanol.coords, 0.0, rng)
    np.testing.assert_array_equal(sample.perturbed, center_project(ethanol.coords))


def _pairwise(z):
    return np.linalg.norm(z[:, None] - z[None], axis=-1)


@pytest.mark.parametrize("mode", ["block-T", "block-C"])
def test_block_noise_keeps_blocks_rigid(tripeptide, mode):
    sample = perturb(mode, tripeptide.coords, tripeptide.block_of, 0.2, 0.5, np.random.default_rng(11))
    for b in range(tripeptide.n_blocks):
        members = tripeptide.block_of == b
        np.testing.assert_allclose(_pairwise(sample.perturbed[members]),
                                   _pairwise(tripeptide.coords[members]), atol=1e-12)
    np.testing.assert_array_equal(sample.reconstruct(), sample.perturbed)


def test_block_complete_without_rotation_matches_translation(tripeptide):
    t = perturb_block_translation(tripeptide.coords, tripeptide.block_of, 0.2, np.random.default_rng(3))
    c = perturb_block_complete(tripeptide.coords, tripeptide.block_of, 0.2, 0.0, np.random.default_rng(3))
    np.testing.assert_array_equal(c.perturbed, t.perturbed)
    np.testing.assert_array_equal(c.omega, 0.0)
    np.testing.assert_array_equal(c.score, 0.0)


def test_block_complete_records_rotations(tripeptide):
    c = perturb_block_complete(tripeptide.coords, tripeptide.block_of, 0.1, 0.5, np.random.default_rng(4))
    assert c.omega.shape == (3, 3)
    assert np.all(np.linalg.norm(c.omega, axis=1) <= np.pi)
    np.testing.assert_allclose(c.score, igso3_score(table_for(0.5), c.omega))


def test_fixed_rotations_are_used(tripeptide):
    omega = np.array([[0.0, 0.0, 0.3], [0.0, 0.0, 0.0], [0.2, 0.0, 0.0]])
    c = perturb_block_complete(tripeptide.coords, tripeptide.block_of, 0.1, 0.5, np.random.default_rng(4), omega=omega)
    np.testing.assert_array_equal(c.omega, omega)
    np.testing.assert_array_equal(c.score[1], 0.0)


def test_unknown_mode(ethanol, rng):
    with pytest.raises(ValueError, match="denoise mode"):
        perturb("atom-R", ethanol.coords, ethanol.block_of, 0.1, 0.1, rng)


def test_rotating_a_sample_rotates_its_targets(tripeptide, rng):
    sample = perturb_block_complete(tripeptide.coords, tripeptide.block_of, 0.1, 0.5, rng)
    q = random_rotation(rng)
    turned = rotate_sample(sample, q)
    forces = rng.standard_normal((tripeptide.n_atoms, 3))
    before = loss_block_C(Tensor(forces), sample).value
    after = loss_block_C(Tensor(forces @ q.T), turned).value
    assert after == pytest.approx(before, rel=1e-10)


# ---------------------------
# IGSO(3)
# ---------------------------

def test_table_is_normalised_and_monotone():
    table = igso3_build(0.5)
    assert table.mass == pytest.approx(1.0, abs=1e-3)
    assert np.all(np.diff(table.cdf) >= 0)
    assert np.all(table.density >= 0)
    assert table.density[0] == 0.0 and table.score[0] == 0.0
    assert not table.grid.flags.writeable


def test_small_scale_uses_approximation():
    table = table_for(0.01)
    assert table.approximate
    assert table.mass == pytest.approx(1.0, abs=1e-3)
    assert table_for(0.01) is table


def test_series_gives_up_for_tiny_scales():
    with pytest.raises(PrecisionError):
        series_terms(0.0005)


def test_non_positive_scale():
    with pytest.raises(ValueError):
        igso3_build(0.0)


def test_sampled_angles_stay_in_range(rng):
    table = table_for(1.0)
    omega = igso3_sample(table, rng, 2000)
    theta = np.linalg.norm(omega, axis=1)
    assert omega.shape == (2000, 3)
    assert theta.max() <= np.pi
    assert igso3_sample(table, rng).shape == (3,)


def test_score_is_odd_and_zero_at_identity(rng):
    table = table_for(0.3)
    omega = igso3_sample(table, rng, 50)
    np.testing.assert_array_equal(igso3_score(table, -omega), -igso3_score(table, omega))
    np.testing.assert_array_equal(igso3_score(table, np.zeros(3)), 0.0)
    with pytest.raises(DomainError):
        igso3_score(table, np.array([3.5, 0.0, 0.0]))


def test_score_points_back_to_identity():
    table = table_for(0.2)
    score = igso3_score(table, np.array([0.3, 0.0, 0.0]))
    assert score[0] < 0 and score[1] == 0.0


def test_table_file_round_trip(tmp_path):
    table = table_for(0.4)
    path = tmp_path / "t.igs3"
    save_table(path, table)
    back = load_table(path)
    assert back.sigma == table.sigma
    for name in ("grid", "density", "cdf", "score"):
        np.testing.assert_array_equal(getattr(back, name), getattr(table, name))
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(ParseError):
        load_table(path)


def test_igso3_check_passes():
    result = check_igso3(seed=0, sigmas=(0.5,), draws=20_000)
    assert result.passed, result.detail


def test_negated_score_is_caught():
    result = check_igso3(seed=0, sigmas=(0.5,), draws=2_000, mutation="score-sign")
    assert not result.passed


# ---------------------------
# Rigid bodies
# ---------------------------

def test_torque_and_inertia_closed_form():
    coords = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    block_of = np.array([0, 0])
    forces = np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
    np.testing.assert_allclose(block_torque(forces, coords, block_of).data, [[0.0, 0.0, 2.0]])
    moments = inertia(coords, block_of)
    np.testing.assert_allclose(moments[0], np.diag([0.0, 2.0, 2.0]))
    np.testing.assert_allclose(pseudo_inverse(moments)[0], np.diag([0.0, 0.5, 0.5]), atol=1e-15)
    state = rigid_state(forces, coords, block_of)
    np.testing.assert_allclose(state.angular_acceleration, [[0.0, 0.0, 1.0]], atol=1e-12)


def test_singleton_blocks_have_no_rotation(rng):
    coords = rng.standard_normal((4, 3))
    alpha = angular_acceleration(block_torque(rng.standard_normal((4, 3)), coords, np.arange(4)),
                                 inertia(coords, np.arange(4)))
    np.testing.assert_array_equal(alpha.data, 0.0)


def test_rigid_check_and_its_mutation():
    assert check_rigid().passed
    assert not check_rigid(mutation="inertia-sign").passed


# ---------------------------
# Losses
# ---------------------------

def test_atom_loss_vanishes_at_its_target(ethanol, rng):
    sample = perturb_atom(ethanol.coords, 0.1, rng)
    target = (sample.perturbed - sample.clean) / 0.1 ** 2
    assert loss_atom(Tensor(target), sample).item() == pytest.approx(0.0, abs=1e-20)
    assert loss_atom(Tensor(target + 1.0), sample).item() == pytest.approx(3.0)


def test_losses_need_positive_translation_noise(ethanol, rng):
    sample = perturb_atom(ethanol.coords, 0.0, rng)
    with pytest.raises(ContractError, match="sigma_t"):
        loss_atom(Tensor(np.zeros((9, 3))), sample)


def test_force_shape_is_checked(ethanol, rng):
    sample = perturb_atom(ethanol.coords, 0.1, rng)
    with pytest.raises(ContractError, match="do not match"):
        loss_atom(Tensor(np.zeros((8, 3))), sample)


def test_rotation_loss_needs_rotation_noise(ethanol, rng):
    sample = perturb_block_translation(ethanol.coords, ethanol.block_of, 0.1, rng)
    with pytest.raises(ContractError, match="no block rotations"):
        loss_block_R(Tensor(np.zeros((9, 3))), sample)


def test_rotation_loss_is_vacuous_without_multi_atom_blocks(rng):
    coords = rng.standard_normal((5, 3))
    sample = perturb_block_complete(coords, np.arange(5), 0.1, 0.5, rng)
    loss, vacuous = loss_block_R(Tensor(rng.standard_normal((5, 3))), sample)
    assert vacuous and loss.item() == 0.0
    breakdown = loss_block_C(Tensor(rng.standard_normal((5, 3))), sample)
    assert breakdown.vacuous and breakdown.rotation == 0.0


def test_complete_loss_is_sum_of_parts(tripeptide, rng):
    sample = perturb_block_complete(tripeptide.coords, tripeptide.block_of, 0.1, 0.5, rng)
    forces = Tensor(rng.standard_normal((15, 3)))
    parts = denoising_loss(forces, sample)
    assert not parts.vacuous
    assert parts.value == pytest.approx(parts.translation + parts.rotation, rel=1e-14)
    assert parts.translation == loss_block_T(forces, sample).item()


def test_rotation_loss_is_differentiable(tripeptide, rng):
    sample = perturb_block_complete(tripeptide.coords, tripeptide.block_of, 0.1, 0.5, rng)
    with Tape() as tape:
        forces = Tensor(rng.standard_normal((15, 3)), requires_grad=True)
        loss, _ = loss_block_R(forces, sample)
    (g,) = tape.gradient(loss, [forces])
    assert g.shape == (15, 3)
    assert np.any(g != 0.0)


def test_reduction_check_and_its_mutation(tiny_config):
    assert check_reductions(tiny_config, seed=0, n_graphs=10).passed
    assert not check_reductions(tiny_config, seed=0, n_graphs=3, mutation="rigid-break").passed


def test_gradient_check_and_its_mutation(tiny_config):
    result = check_gradients(tiny_config, seed=0, entries_per_tensor=3)
    assert result.passed, result.detail
    assert not check_gradients(tiny_config, seed=0, modes=("block-C",), mutation="grad-scale",
                               entries_per_tensor=3).passed


@pytest.mark.slow
def test_gradient_check_covers_every_parameter_entry(tiny_config):
    result = check_gradients(tiny_config, seed=0)
    assert result.passed, result.detail
    params = ModelParams.initialize(tiny_config.model, np.random.default_rng(0))
    n_entries = sum(a.size for a in params.arrays.values())
    assert result.detail.startswith(f"{3 * n_entries} entries")
