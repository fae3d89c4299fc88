import math

import numpy as np
import pytest

rmis = pytest.importorskip("rmis")


def linear_bits(*bits):
    return np.array(bits, dtype=np.uint8)


def test_rm_full_on_constant_mlp_head():
    model = rmis.mlp(4, width=8, depth=1, seed=1)
    head = [k for k in model.params() if k.endswith(".weight")][-1]
    model.set_param(head, np.zeros_like(model.params()[head]))
    x = linear_bits(1, 0, 1, 1)
    assert rmis.rm_full_loss(model, x) == pytest.approx(4.0)
    assert rmis.rm_g_loss(model, x) == pytest.approx(1.0)
    np.testing.assert_allclose(rmis.exact_optimal_proposal(model, x), 0.25)


def test_ising_ring_energy_and_coupling():
    lattice = rmis.ising_lattice(4, 0.25)
    ones = np.ones((1, 16), dtype=np.uint8)
    # 32 edges on a 4x4 torus, s^T J s = 2 * 0.25 * 32.
    assert lattice.energy(ones)[0] == pytest.approx(-16.0)
    j = rmis.ising_coupling(lattice)
    assert j.shape == (16, 16)
    assert np.allclose(j, j.T)
    assert rmis.rmse_connectivity(j, j) == 0.0


def test_proposals_sum_to_one_and_match_for_small_models():
    model = rmis.mlp(10, width=16, depth=2, seed=3)
    x = np.random.default_rng(0).integers(0, 2, size=10).astype(np.uint8)
    guided = rmis.gradient_guided_proposal(model, x)
    exact = rmis.exact_optimal_proposal(model, x)
    assert guided.sum() == pytest.approx(1.0)
    assert exact.sum() == pytest.approx(1.0)
    e = model.energy(x[None, :])[0]
    deltas = e - model.neighbor_energies(x)
    np.testing.assert_allclose(rmis.rm_full_loss(model, x), np.exp(2 * deltas).sum(), rtol=1e-12)


def test_gray_codec():
    assert rmis.gray_encode(0.5, 4, 0.0, 1.0) == [1, 1, 0, 0]
    assert rmis.gray_decode([1, 1, 0, 0], 0.0, 1.0) == pytest.approx(8 / 15)


def test_dataset_roundtrip(tmp_path):
    bits = rmis.encode_dataset("8gaussians", 50, bits=5, seed=2)
    assert bits.shape == (50, 10)
    path = str(tmp_path / "ds.bin")
    rmis.save_dataset(path, bits, {"source": "pytest"})
    back, manifest = rmis.load_dataset(path)
    assert np.array_equal(back, bits)
    assert manifest == {"source": "pytest"}


def test_metrics():
    zeros = np.zeros((2, 4), dtype=np.uint8)
    ones = np.ones((2, 4), dtype=np.uint8)
    assert rmis.mmd_linear(zeros, ones) == 8.0
    assert rmis.mmd_linear(ones, ones) == 0.0
    assert rmis.hamming_kernel(linear_bits(0, 1, 0, 1), linear_bits(0, 1, 1, 1)) == 3.0


def test_training_is_deterministic_and_lowers_objective(tmp_path):
    data = rmis.encode_dataset("2spirals", 400, bits=4, seed=0)
    model = rmis.mlp(8, width=16, depth=2, seed=0)
    runs = []
    for _ in range(2):
        t = rmis.Trainer(model, data, estimator="rm-full", batch_size=64, lr=1e-2,
                         iterations=150, seed=4)
        runs.append(t.run(objective_samples=400))
    assert [e["objective"] for e in runs[0]] == [e["objective"] for e in runs[1]]
    assert runs[0][-1]["objective"] < runs[0][0]["objective"]

    t = rmis.Trainer(model, data, estimator="rmwggis-adv", s=3, batch_size=32, iterations=5)
    for _ in range(5):
        assert math.isfinite(t.step())
    ckpt = str(tmp_path / "t.ckpt")
    t.save_checkpoint(ckpt)
    loaded = rmis.load_model(ckpt)
    np.testing.assert_array_equal(loaded.energy(data[:20]), t.model().energy(data[:20]))


def test_errors_map_to_python_exceptions():
    model = rmis.mlp(4, width=4, depth=1)
    with pytest.raises(ValueError):
        model.energy(np.zeros((1, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        rmis.sample_2d("3spirals", 5)
    with pytest.raises(ValueError):
        rmis.batch_loss(model, np.zeros((2, 4), dtype=np.uint8), estimator="nope")
