"""Smoke tests for the _gesturekit extension module."""

import math

import numpy as np
import pytest

gk = pytest.importorskip("_gesturekit")


def test_package_wrapper_reexports_the_extension():
    gesturekit = pytest.importorskip("gesturekit")
    assert gesturekit.cosine_mask_count(10, 1, 5) == 9


def test_infonce_uniform_matrix_is_ln_n():
    S = np.full((4, 4), 0.3)
    assert gk.infonce_loss(S, 0.7) == pytest.approx(math.log(4.0), abs=1e-12)


def test_infonce_identity_closed_form():
    assert gk.infonce_loss(np.eye(2), 1.0) == pytest.approx(
        math.log(1.0 + math.exp(-1.0)), abs=1e-12
    )


def test_cosine_similarity_and_retrieval():
    items = [np.eye(3)[i][None, :] for i in range(3)]
    S = gk.cosine_similarity_matrix(items, items)
    assert np.allclose(S, np.eye(3))
    recall = gk.retrieval_recall(S, [1, 3])
    assert recall == [1.0, 1.0]


def test_chronological_negative_blocks():
    speech = np.arange(15, dtype=float)[:, None]
    segments = [("a", 0.0, 0.2), ("b", 0.2, 0.4), ("c", 0.4, 0.6)]
    out = gk.build_chronological_negative(speech, segments, [2, 0, 1], 25.0)
    assert out[:, 0].tolist() == [10, 11, 12, 13, 14, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
    with pytest.raises(ValueError):
        gk.build_chronological_negative(speech, segments, [0, 1, 2], 25.0)


def test_rvq_round_trip_and_prefix():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(200, 6))
    stack = gk.train_codebooks([data], layers=3, codes=16, epochs=8, seed=1)
    tokens, quantized = gk.rvq_encode(data, stack)
    assert tokens.shape == (200, 3)
    decoded = gk.rvq_decode(tokens, stack)
    assert np.allclose(decoded, quantized)
    errs = [
        np.mean(np.sum((data - gk.rvq_decode_prefix(tokens, stack, r)) ** 2, axis=1))
        for r in (1, 2, 3)
    ]
    assert errs[0] >= errs[1] >= errs[2]


def test_cosine_schedule_trace():
    assert [gk.cosine_mask_count(10, l, 5) for l in range(6)] == [10, 9, 8, 5, 3, 0]


def test_oracle_decode_recovers_tokens():
    rng = np.random.default_rng(1)
    truth = rng.integers(0, 32, size=40).tolist()
    decoded, trace = gk.iterative_decode_oracle(truth, 32, steps=5)
    assert decoded == truth
    assert trace[-1] == 0


def test_corruption_is_deterministic():
    tokens = list(range(50))
    a = gk.corrupt_tokens(tokens, vocab=64, seed=9)
    b = gk.corrupt_tokens(tokens, vocab=64, seed=9)
    assert a == b
    corrupted, positions, ratio = a
    assert 0.5 <= ratio <= 1.0
    assert len(positions) == math.ceil(ratio * 50)


def test_tps_translation_and_radial_basis():
    driving = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    params = gk.tps_fit(driving, driving + np.array([2.0, 3.0]))
    assert np.abs(params.weights).max() < 1e-8
    mapped = gk.tps_eval(params, np.array([[0.25, 0.75]]))
    assert np.allclose(mapped, [[2.25, 3.75]], atol=1e-9)
    assert gk.radial_basis(math.exp(0.5)) == pytest.approx(math.e, abs=1e-12)


def test_warp_zero_flow_is_identity():
    rng = np.random.default_rng(2)
    image = rng.random((8, 10))
    zero = np.zeros((8, 10))
    out = gk.warp_image(image, zero, zero)
    assert np.array_equal(out, image.astype(np.float32).astype(np.float64))


def test_edge_map_values():
    grid = gk.edge_map(np.array([2.0, 10.0]), np.array([20.0, 10.0]), 3.0, 32, 32)
    assert grid[10, 5] == 1.0
    assert grid[13, 5] == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_heatmap_render_resolutions():
    frame, _, _ = gk.synth_generate("circle-motion", 10, 3)
    points = frame[0].reshape(-1, 2)
    maps = gk.render_skeleton_heatmaps(points, gk.standard_edges(), [32, 64])
    assert [m.shape[0] for m in maps] == [32, 64]
    assert all(0.0 <= m.min() and m.max() <= 1.0 for m in maps)


def test_frechet_closed_forms():
    assert gk.frechet_distance_stats(
        np.zeros(2), np.eye(2), np.array([1.0, 0.0]), np.eye(2)
    ) == pytest.approx(1.0, abs=1e-9)
    assert gk.frechet_distance_stats(
        np.zeros(2), np.diag([1.0, 4.0]), np.zeros(2), np.diag([4.0, 1.0])
    ) == pytest.approx(2.0, abs=1e-9)


def test_metrics_basics():
    rng = np.random.default_rng(3)
    frames = rng.random((5, 232)) * 256.0
    assert gk.pcm(frames, frames, 0.5) == 1.0
    assert gk.mse(frames, frames) == 0.0
    assert gk.beat_align_score([1.0], [1.1], 0.1) == pytest.approx(
        math.exp(-0.5), abs=1e-12
    )


def test_pipeline_runs_and_is_deterministic(tmp_path):
    config = gk.default_config().replace("frames = 80", "frames = 100")
    config = config.replace("codes = 1024", "codes = 32").replace("layers = 6", "layers = 3")
    a = gk.run_pipeline(config, tmp_path / "a")
    b = gk.run_pipeline(config, tmp_path / "b")
    assert a == b
    assert (tmp_path / "a" / "report.json").exists()
    assert (tmp_path / "a" / "warped.png").exists()
