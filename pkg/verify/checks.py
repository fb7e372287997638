"""Property checks that certify the model, kernels and noise machinery.

Each check returns a CheckReport and accepts ``mutation``, the name of a
deliberate defect (see MUTATIONS) the check must catch.
"""
import logging
import os
import tempfile
import time
from dataclasses import replace

import numpy as np
from scipy.stats import chisquare

from autodiff import Tensor, index, layer_norm
from autodiff.gradcheck import compare_gradients, evaluate, relative_error
from blockgraph.batching import collate
from blockgraph.edges import classify_edges
from blockgraph.graph import point_cloud_graph, retype_edges
from blockgraph.shards import read_shard, write_shard
from config import TOLERANCES, Thresholds
from denoise.geometry import random_rotation, rotation_matrix, skew
from denoise.igso3 import igso3_build, igso3_sample, igso3_score, series
from denoise.losses import denoising_loss, loss_atom, loss_block_C, loss_block_R, loss_block_T
from denoise.perturb import perturb, perturb_atom, perturb_block_complete, perturb_block_translation
from denoise.rigid import angular_acceleration, block_torque, inertia
from models import FAIL, PASS, CheckReport, MolGraph, RawMolecule
from molio import vocab
from molio.xyz import parse_xyz, write_xyz
from network.attention import attention_layer, tiled_attention
from network.backbone import forward
from network.embedding import embed_graph
from network.heads import force_head, pooled_head
from network.inputs import prepare_inputs
from network.params import ModelParams
from train.checkpointing import load_training_state, save_training_state
from train.loop import TrainState, perturb_graph, train_step

logger = logging.getLogger(__name__)

MUTATIONS = {
    "absolute-vectors": ("equivariance", "vector embedding reads absolute source coordinates"),
    "grad-scale": ("gradients", "analytic gradients scaled by 1.001"),
    "tiled-no-rescale": ("kernel", "streaming softmax skips the running-max correction"),
    "score-sign": ("igso3", "rotation score table negated"),
    "rigid-break": ("reductions", "per-atom jitter after the complete block perturbation"),
    "inertia-sign": ("rigid", "inertia assembled as u u^T - |u|^2 Id"),
    "edge-threshold": ("edges", "topological threshold lowered to 0.9 A"),
    "xyz-low-precision": ("roundtrips", "XYZ coordinates rounded to 1e-3 A"),
    "naive-tiles": ("memory", "tiled kernel run with one tile spanning every key"),
}

GRADCHECK_SIGMA = 0.5
IGSO3_SIGMAS = (0.05, 0.1, 0.5, 1.5)
KERNEL_SIZES = (5, 33, 128)
KERNEL_TILES = (1, 7, 32, None)
_ELEMENTS = ("C", "N", "O", "S", "H")


def report(name, value, tolerance, started, seed, detail="", passed=None):
    if passed is None:
        passed = bool(np.isfinite(value)) and value <= tolerance
    return CheckReport(name=name, status=PASS if passed else FAIL, value=float(value),
                       tolerance=float(tolerance), runtime_ms=1000.0 * (time.perf_counter() - started),
                       seed=int(seed), detail=detail)


def relative_deviation(actual, expected):
    actual, expected = np.asarray(actual), np.asarray(expected)
    diff = float(np.max(np.abs(actual - expected))) if actual.size else 0.0
    if diff == 0.0:
        return 0.0
    return diff / max(float(np.max(np.abs(expected))), np.finfo(np.float64).tiny)


def random_graph(rng, n_atoms=None, max_atoms=32, max_block=3, thresholds=None):
    """Random blocks of 1..max_block atoms, atoms ~1 A around their block center."""
    n = int(n_atoms or rng.integers(4, max_atoms + 1))
    sizes = []
    while sum(sizes) < n:
        sizes.append(min(int(rng.integers(1, max_block + 1)), n - sum(sizes)))
    m = len(sizes)
    block_of = np.repeat(np.arange(m), sizes)
    centers = rng.uniform(-1.0, 1.0, (m, 3)) * 1.5 * m ** (1.0 / 3.0)
    coords = centers[block_of] + 0.6 * rng.standard_normal((n, 3))
    elements = rng.choice(_ELEMENTS, n)
    return MolGraph(
        atom_code=[vocab.atom_code(e) for e in elements],
        block_of=block_of,
        block_code=rng.integers(2, vocab.BLOCK_VOCAB_SIZE, m),
        pos_code=rng.integers(3, vocab.POS_VOCAB_SIZE, n),
        coords=coords,
        edges=classify_edges(coords, block_of, thresholds or Thresholds(), m),
        name=f"random-{n}",
    )


# ---------------------------
# Equivariance
# ---------------------------

def _outputs(graph, p, model, mutation):
    inputs = prepare_inputs(graph, model)
    if mutation == "absolute-vectors":
        inputs = replace(inputs, edge_vec=inputs.coords.reshape(-1, 3)[inputs.src])
    inputs, state = forward(inputs, p, model)
    forces = force_head(state.h, state.v, inputs, p)
    energy = pooled_head(state.h, inputs, "graph", p)
    return state.h.data, state.v.data, forces.data, energy.data


def check_equivariance(config, seed=0, n_trials=100, mutation=None):
    """Scalars invariant, vectors and forces rotated, under random rigid motions."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for trial in range(n_trials):
        p = ModelParams.initialize(config.model, rng).tensors()
        graph = random_graph(rng, thresholds=config.graph)
        rotation = random_rotation(rng) if trial else np.eye(3)
        shift = rng.uniform(-10.0, 10.0, 3) if trial else np.zeros(3)
        h0, v0, f0, e0 = _outputs(graph, p, config.model, mutation)
        h1, v1, f1, e1 = _outputs(graph.with_coords(graph.coords @ rotation.T + shift), p, config.model, mutation)
        dev = max(relative_deviation(h1, h0), relative_deviation(e1, e0),
                  relative_deviation(v1, np.einsum("ij,bnjh->bnih", rotation, v0)),
                  relative_deviation(f1, f0 @ rotation.T))
        if dev > worst:
            worst, where = dev, f"trial {trial} ({graph.n_atoms} atoms)"
    return report("equivariance", worst, TOLERANCES.equivariance, started, seed,
                  f"{n_trials} trials; worst {where}" if where else f"{n_trials} trials")


# ---------------------------
# Gradients
# ---------------------------

def check_gradients(config, seed=0, modes=("atom", "block-T", "block-C"), mutation=None,
                    entries_per_tensor=None):
    """Tape gradients of every parameter against central differences.

    Every entry is compared unless ``entries_per_tensor`` caps it to the
    largest-gradient entry plus random picks.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    graph = random_graph(rng, n_atoms=8, thresholds=config.graph)
    params = ModelParams.initialize(config.model, rng)
    worst, where, checked = 0.0, "", 0
    for k, mode in enumerate(modes):
        sample = perturb(mode, graph.coords, graph.block_of, GRADCHECK_SIGMA, GRADCHECK_SIGMA,
                         np.random.default_rng([seed, k]))
        inputs = prepare_inputs(retype_edges(graph, sample.perturbed, config.graph), config.model)

        def loss_fn(p):
            _, state = forward(inputs, p, config.model)
            forces = force_head(state.h, state.v, inputs, p)
            return denoising_loss(index(forces, (0, slice(None))), sample).total

        results = compare_gradients(loss_fn, params.arrays, step=TOLERANCES.gradcheck_step,
                                    entries_per_tensor=entries_per_tensor, rng=rng)
        if mutation == "grad-scale":
            loss = evaluate(loss_fn, params.arrays)
            results = [replace(r, analytic=1.001 * r.analytic,
                               rel_error=relative_error(1.001 * r.analytic, r.numeric, loss))
                       for r in results]
        checked += len(results)
        for r in results:
            if r.rel_error > worst:
                worst = r.rel_error
                where = f"{mode} {r.name}{list(r.index)}: analytic {r.analytic:.6e} numeric {r.numeric:.6e}"
    return report("gradients", worst, TOLERANCES.gradcheck, started, seed,
                  f"{checked} entries; worst {where}" if where else f"{checked} entries")


# ---------------------------
# Attention kernels
# ---------------------------

def kernel_inputs(config, n, rng):
    """Layer-0 attention inputs for a padded batch of two point clouds."""
    graphs = [point_cloud_graph(n, rng), point_cloud_graph(max(1, n // 2), rng)]
    inputs = prepare_inputs(collate(graphs), config.model)
    p = ModelParams.initialize(config.model, rng).tensors()
    h, v = embed_graph(inputs, p, config.model)
    h_norm = layer_norm(h, p["layers.0.ln_attn.gamma"], p["layers.0.ln_attn.beta"], config.model.ln_eps)
    return inputs, p, h_norm, v


def check_kernel_equivalence(config, seed=0, sizes=KERNEL_SIZES, tiles=KERNEL_TILES, mutation=None):
    started = time.perf_counter()
    if config.model.L < 1:
        return report("kernel", 0.0, TOLERANCES.kernel, started, seed, "model has no attention layers")
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for n in sizes:
        inputs, p, h_norm, v = kernel_inputs(config, n, rng)
        dh, dv = attention_layer(h_norm, v, inputs, p, 0, config.model)
        for tile in tiles:
            tile = tile or n
            th, tv = tiled_attention(h_norm, v, inputs, p, 0, config.model, tile,
                                     rescale=mutation != "tiled-no-rescale")
            diff = max(float(np.max(np.abs(th.data - dh.data))), float(np.max(np.abs(tv.data - dv.data))))
            if diff >= worst:
                worst, where = diff, f"N={n} tile={tile}"
    return report("kernel", worst, TOLERANCES.kernel, started, seed, f"worst at {where}")


# ---------------------------
# IGSO(3)
# ---------------------------

def _series_score(theta, sigma, h=1e-5):
    up = np.log(series(theta + h, sigma))
    down = np.log(series(theta - h, sigma))
    return (up - down) / (2.0 * h)


def igso3_metrics(sigma, rng, draws=100_000, bins=40, mutation=None):
    """Named deviations for one table, each already divided by its tolerance."""
    table = igso3_build(sigma)
    if mutation == "score-sign":
        table = replace(table, score=-table.score)
    out = {
        "normalisation": abs(table.mass - 1.0) / TOLERANCES.quadrature,
        "monotone": 0.0 if np.all(np.diff(table.cdf) >= 0) and np.all(table.density >= 0) else np.inf,
    }

    theta = np.linalg.norm(igso3_sample(table, rng, draws), axis=1)
    edges = np.interp(np.linspace(0.0, table.mass, bins + 1), table.cdf, table.grid)
    edges[0], edges[-1] = 0.0, np.pi
    observed, _ = np.histogram(theta, edges)
    expected = np.full(bins, draws / bins)
    p_value = chisquare(observed, expected).pvalue
    out["histogram"] = TOLERANCES.p_value / max(p_value, np.finfo(np.float64).tiny)
    out["angle range"] = 0.0 if theta.max() <= np.pi else np.inf

    idx = np.searchsorted(table.cdf, table.mass * np.array([0.01, 0.99]))
    picks = np.unique(np.linspace(max(idx[0], 1), min(idx[1], len(table.grid) - 2), 17).astype(int))
    reference = _series_score(table.grid[picks], sigma)
    out["score"] = float(np.max(np.abs(table.score[picks] - reference) / np.abs(reference))) / TOLERANCES.score

    omega = igso3_sample(table, rng, 64)
    odd = np.max(np.abs(igso3_score(table, omega) + igso3_score(table, -omega)))
    out["odd symmetry"] = 0.0 if odd == 0.0 else np.inf
    return out


def check_igso3(config=None, seed=0, sigmas=IGSO3_SIGMAS, draws=100_000, mutation=None):
    """Normalisation, CDF, sampling histogram and score at several scales; value is the worst ratio to tolerance."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for sigma in sigmas:
        for name, ratio in igso3_metrics(sigma, rng, draws, mutation=mutation).items():
            if ratio > worst or not where:
                worst, where = max(worst, ratio), f"sigma_r={sigma} {name}"
    omega = rng.uniform(-1.0, 1.0, (32, 3))
    omega *= (2.0 * rng.random(32) / np.linalg.norm(omega, axis=1))[:, None]
    q = rotation_matrix(omega)
    ortho = float(np.max(np.abs(q.transpose(0, 2, 1) @ q - np.eye(3))))
    det = float(np.max(np.abs(np.linalg.det(q) - 1.0)))
    oracle = float(np.max(np.abs(q - series_exponential(skew(omega)))))
    for name, ratio in (("orthogonality", max(ortho, det) / TOLERANCES.rotation),
                        ("exponential oracle", oracle / TOLERANCES.series_oracle)):
        if ratio > worst:
            worst, where = ratio, name
    return report("igso3", worst, 1.0, started, seed, f"worst {where}")


def series_exponential(k, terms=20):
    """Σ_{n<terms} Kⁿ/n! for stacked 3x3 matrices."""
    out = np.broadcast_to(np.eye(3), k.shape).copy()
    term = out.copy()
    for n in range(1, terms):
        term = term @ k / n
        out = out + term
    return out


# ---------------------------
# Reductions and rigid bodies
# ---------------------------

def _intra_block_deviation(before, after, block_of):
    worst = 0.0
    for b in np.unique(block_of):
        a, z = before[block_of == b], after[block_of == b]
        if len(a) < 2:
            continue
        da = np.linalg.norm(a[:, None] - a[None], axis=-1)
        dz = np.linalg.norm(z[:, None] - z[None], axis=-1)
        worst = max(worst, float(np.max(np.abs(da - dz))))
    return worst


def check_reductions(config=None, seed=0, n_graphs=50, mutation=None):
    """Singleton-block equivalence, rigidity and loss decomposition."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    sigma_t = config.train.sigma_t if config else 0.04
    sigma_r = config.train.sigma_r if config else 0.1
    worst, where = 0.0, ""

    def note(value, label):
        nonlocal worst, where
        if value > worst or not where:
            worst, where = max(worst, value), label

    for k in range(n_graphs):
        n = int(rng.integers(2, 24))
        coords = rng.uniform(-5.0, 5.0, (n, 3))
        singles = np.arange(n)
        a = perturb_atom(coords, sigma_t, np.random.default_rng([seed, k]))
        b = perturb_block_translation(coords, singles, sigma_t, np.random.default_rng([seed, k]))
        forces = Tensor(rng.standard_normal((n, 3)))
        note(float(np.max(np.abs(a.perturbed - b.perturbed))), "singleton perturbation")
        note(abs(loss_atom(forces, a).item() - loss_block_T(forces, b).item()), "singleton loss")

        graph = random_graph(rng, n_atoms=max(n, 4))
        c = perturb_block_complete(graph.coords, graph.block_of, sigma_t, sigma_r, np.random.default_rng([seed, k, 1]))
        moved = c.perturbed
        if mutation == "rigid-break":
            moved = moved + 1e-9 * rng.standard_normal(moved.shape)
        note(_intra_block_deviation(graph.coords, moved, graph.block_of), "rigidity")

        forces = Tensor(rng.standard_normal((graph.n_atoms, 3)))
        parts = loss_block_C(forces, c)
        rotation, _ = loss_block_R(forces, c)
        note(abs(parts.total.item() - (loss_block_T(forces, c).item() + rotation.item())), "decomposition")
    return report("reductions", worst, TOLERANCES.reduction, started, seed, f"worst {where}")


def check_rigid(config=None, seed=0, mutation=None):
    """Closed-form torque, inertia and pseudo-inverse examples."""
    started = time.perf_counter()
    coords = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [4.0, 4.0, 4.0]])
    block_of = np.array([0, 0, 1])
    forces = np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [1.0, 2.0, 3.0]])
    torque = block_torque(forces, coords, block_of).data
    moments = inertia(coords, block_of)
    if mutation == "inertia-sign":
        moments = -moments
    devs = [
        np.max(np.abs(torque - [[0.0, 0.0, 2.0], [0.0, 0.0, 0.0]])),
        np.max(np.abs(moments[0] - np.diag([0.0, 2.0, 2.0]))),
        np.max(np.abs(moments[1])),
        np.max(np.abs(angular_acceleration(np.array([[0.0, 0.0, 2.0]]), moments[:1]).data - [0.0, 0.0, 1.0])),
        np.max(np.abs(angular_acceleration(np.array([[5.0, 0.0, 0.0]]), moments[:1]).data)),
    ]
    return report("rigid", float(max(devs)), TOLERANCES.reduction, started, seed,
                  "torque (0,0,2), inertia diag(0,2,2), null-space drop")


# ---------------------------
# Edges and round trips
# ---------------------------

def check_edges(config=None, seed=0, mutation=None):
    """Two single-atom blocks at 1.0, 5.0 and 12.0 A give types 1, 2 and no edge."""
    started = time.perf_counter()
    thresholds = config.graph if config else Thresholds()
    if mutation == "edge-threshold":
        thresholds = Thresholds(delta_topo=0.9, delta_max=thresholds.delta_max)
    wrong = []
    for distance, expected in ((1.0, 1), (5.0, 2), (12.0, None)):
        coords = np.array([[0.0, 0.0, 0.0], [distance, 0.0, 0.0]])
        edges = classify_edges(coords, np.array([0, 1]), thresholds, 2)
        got = None if len(edges) == 0 else int(edges[0, 2])
        if got != expected:
            wrong.append(f"{distance} A -> {got} (expected {expected})")
    return report("edges", float(len(wrong)), 0.0, started, seed, "; ".join(wrong) or "types 1, 2, none")


def check_roundtrips(config, seed=0, mutation=None):
    """Shard, checkpoint and XYZ round trips."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    failures = []
    xyz_dev = 0.0
    with tempfile.TemporaryDirectory() as tmp:
        graphs = [random_graph(rng, max_atoms=12, thresholds=config.graph) for _ in range(3)]
        shard = os.path.join(tmp, "roundtrip.eptg")
        write_shard(shard, graphs)
        if not all(a.same_as(b) for a, b in zip(graphs, read_shard(shard))):
            failures.append("shard")

        mol = RawMolecule(elements=["C", "H", "O"], coords=rng.uniform(-5.0, 5.0, (3, 3)), name="roundtrip")
        written = replace(mol, coords=np.round(mol.coords, 3)) if mutation == "xyz-low-precision" else mol
        xyz_dev = float(np.max(np.abs(parse_xyz(write_xyz(written)).coords - mol.coords)))
        if xyz_dev > TOLERANCES.roundtrip_xyz:
            failures.append(f"xyz deviation {xyz_dev:.2e}")

        state = TrainState.fresh(config)
        graph = graphs[0]
        samples = [perturb_graph(graph, config.train, np.random.default_rng([seed, 1]))]
        train_step(state, [graph], samples, config, config.train.lr)
        path = os.path.join(tmp, "roundtrip.ept")
        save_training_state(path, state, config)
        restored, _ = load_training_state(path, expected=config)
        direct = train_step(state, [graph], samples, config, config.train.lr).loss
        replayed = train_step(restored, [graph], samples, config, config.train.lr).loss
        if direct != replayed:
            failures.append(f"checkpoint replay {direct!r} != {replayed!r}")
    return report("roundtrips", float(len(failures)), 0.0, started, seed,
                  "; ".join(failures) or "shard, checkpoint, xyz")
