import numpy as np
import pytest
from hypothesis import given, strategies as st

from dsdkit.graph import GraphError, diffusion_operator
from dsdkit import synth


def test_three_block_configuration():
    spec = synth.three_block_sbm_spec(0)
    assert spec.block_sizes == (100, 100, 100)
    assert spec.prob[0, 0] == 0.5 and spec.prob[0, 1] == 0.001 and spec.prob[1, 2] == 0.01
    g, part = synth.gen_hsbm(spec)
    assert g.n == 300 and g.is_connected()
    assert part.K == 3
    # blocks are contiguous
    assert all(np.array_equal(b, np.arange(100 * k, 100 * (k + 1))) for k, b in enumerate(part.blocks))


@given(st.integers(0, 2**31))
def test_generators_are_bit_reproducible(seed):
    spec = synth.SbmSpec((10, 15), [[0.5, 0.1], [0.1, 0.4]], seed)
    a, _ = synth.gen_hsbm(spec)
    b, _ = synth.gen_hsbm(spec)
    assert (a.weights != b.weights).nnz == 0
    p1 = synth.gen_ring_gaussian_bar(seed % 100)[3]
    p2 = synth.gen_ring_gaussian_bar(seed % 100)[3]
    assert np.array_equal(p1, p2)


def test_within_block_density_concentrates():
    # W = max(X, X^T) makes an off-diagonal entry an edge with probability 1 - (1 - p)^2
    p = 0.5
    target = 1 - (1 - p) ** 2
    vals = []
    for seed in range(50):
        g, part = synth.gen_hsbm(synth.three_block_sbm_spec(seed))
        B = g.weights[:100, :100].toarray()
        iu = np.triu_indices(100, 1)
        vals.append(B[iu].mean())
    m = np.mean(vals)
    se = np.sqrt(target * (1 - target) / (len(iu[0]) * 50))
    assert abs(m - target) < 3 * se


def test_disjoint_cliques_rejected():
    with pytest.raises(GraphError):
        synth.gen_hsbm(synth.SbmSpec((5, 5, 5), np.eye(3), 0))


def test_spec_validation():
    with pytest.raises(ValueError):
        synth.SbmSpec((5, 5), [[0.5, 0.1], [0.2, 0.5]])
    with pytest.raises(ValueError):
        synth.SbmSpec((5, 0), np.eye(2))
    with pytest.raises(ValueError):
        synth.SbmSpec((5, 5), [[1.5, 0], [0, 1]])


def test_lowrank_is_the_expectation():
    spec = synth.three_block_sbm_spec(0)
    g, _ = synth.gen_lowrank_block(spec)
    W = g.weights.toarray()
    assert set(np.unique(W)) == {0.001, 0.01, 0.5}
    assert W[0, 0] == 0.5
    one, _ = synth.gen_lowrank_block(synth.SbmSpec((7,), [[0.3]]))
    assert np.allclose(diffusion_operator(one).dense(), 1 / 7)


def test_lowrank_matches_average_of_draws():
    spec = synth.SbmSpec((8, 8), [[0.6, 0.2], [0.2, 0.4]], 0)
    rng = synth.rng_from_seed(0)
    Pm = spec.expected()
    draws = np.mean([rng.random(Pm.shape) < Pm for _ in range(200)], axis=0)
    se = np.sqrt(Pm * (1 - Pm) / 200)
    assert np.mean(np.abs(draws - Pm) < 3 * se) > 0.98
    assert np.array_equal(synth.gen_lowrank_block(spec)[0].weights.toarray(), Pm)


def test_mixtures():
    g, part, pts = synth.three_gaussian_mixture(0)
    assert g.n == 300 and part.K == 3
    assert np.allclose(pts.reshape(3, 100, 2).mean(axis=1), synth.MIXTURE_MEANS, atol=0.35)
    g, pts, parts = synth.four_gaussians(0)
    assert [p.K for p in parts] == [4, 3, 2, 1]
    assert all(a.refines(b) for a, b in zip(parts, parts[1:]))
    with pytest.raises(GraphError):
        synth.gen_gaussian_mixture([(0, 0)], 1.0, 1, 1.0)


def test_ring_bar_geometry():
    g, fine, coarse, pts = synth.gen_ring_gaussian_bar(0)
    assert fine.K == 3 and coarse.K == 2 and fine.refines(coarse)
    ring = pts[fine.blocks[0]]
    assert np.allclose(np.linalg.norm(ring, axis=1), 1.0)
    bar = pts[fine.blocks[2]]
    assert bar[:, 0].min() >= -0.5 and bar[:, 0].max() <= 0.5
    assert bar[:, 1].min() >= -2.6 and bar[:, 1].max() <= -2.4


def test_presets_for_benchmarks():
    assert synth.modular_sbm_spec(0).n == 2000
    spec = synth.nested_sbm_spec(0)
    assert spec.n == 300 and len(spec.block_sizes) == 6
