# Copyright 2026 The pnpdepth Authors.
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

import pnpdepth as pd


def test_scene_shapes_and_determinism():
    rgb, depth = pd.generate_scene(3)
    assert rgb.shape == (1, 3, 48, 64)
    assert depth.shape == (1, 1, 48, 64)
    assert 0.0 <= rgb.min() and rgb.max() <= 1.0
    assert depth.min() > 0.0
    rgb2, depth2 = pd.generate_scene(3)
    assert np.array_equal(rgb, rgb2) and np.array_equal(depth, depth2)


def test_uniform_sampling_count():
    _, depth = pd.generate_scene(1)
    values, mask = pd.sample_uniform(depth, 31, seed=5)
    assert int(mask.sum()) == 31
    assert np.array_equal(values, depth * mask)


def test_lidar_vlp16_scanlines():
    _, depth = pd.generate_scene(1)
    _, mask, scanlines = pd.sample_lidar(depth, "VLP-16", seed=1)
    assert scanlines == 16
    assert mask.sum() > 0
    assert set(pd.lidar_presets()) >= {"VLP-16", "HDL-32E", "HDL-64E", "VLP-32C"}


def test_refine_zero_iterations_is_base_and_model_frozen():
    rgb, depth = pd.generate_scene(2)
    values, mask = pd.sample_uniform(depth, 31, seed=2)
    model = pd.build_model("plain_cnn", "sd", seed=4)
    x = pd.make_input("sd", rgb, values, mask)
    before = model.to_bytes()
    r0 = pd.refine(model, x, values, mask, iterations=0)
    assert np.array_equal(r0["depth"], model.run(x))
    r = pd.refine(model, x, values, mask)
    assert len(r["sparse_loss"]) == 6
    assert r["status"] == "ok"
    assert model.to_bytes() == before


def test_metrics_and_formatting():
    _, depth = pd.generate_scene(1)
    m = pd.evaluate(depth, depth)
    assert m["rmse"] == 0.0 and m["delta1"] == 1.0
    assert pd.format_improvement(0.8933, 0.5021) == "+43.8%"


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(pd.ConfigError):
        pd.build_model("vgg", "sd")
    bad = tmp_path / "bad.pnpd"
    bad.write_bytes(b"not a checkpoint")
    with pytest.raises(pd.IoError):
        pd.load_checkpoint(str(bad))


def test_checkpoint_round_trip(tmp_path):
    model = pd.build_model("encdec", "rgb+sd", seed=9)
    path = tmp_path / "m.pnpd"
    pd.save_checkpoint(str(path), model)
    assert pd.load_checkpoint(str(path)).to_bytes() == model.to_bytes()


def test_cli_in_process(tmp_path):
    code, out, _ = pd.run_cli(["gen", "--n", "2", "--seed", "1", "--out", str(tmp_path)])
    assert code == 0
    assert "scene_0001.ppm" in out
    code, _, err = pd.run_cli(["sweep", "--kind", "nope"])
    assert code == 2 and err
