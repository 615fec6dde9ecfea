import json
import os
import tempfile

import numpy as np
import pytest

import scenegen as sg


def test_assignment_and_errors():
    perm, cost = sg.solve_assignment(np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]]))
    assert perm == [1, 0, 2]
    assert cost == 5.0
    with pytest.raises(sg.InvalidInputError):
        sg.solve_assignment(np.array([[np.nan]]))


def test_scene_roundtrip_and_transform():
    cfg = sg.CategoryConfig.uniform(["bed", "stand"], 2, 1)
    values = np.zeros((cfg.rows, cfg.num_objects))
    values[:, 0] = [1, 0.5, -0.2, 0.25, 1, 0, 2, 1.6, 0.5, 0.1]
    scene = sg.Scene(cfg, values)
    assert sg.Scene.from_json(scene.to_json()) == scene
    assert scene.count_existing() == 1

    motion = sg.RigidMotion(np.pi / 2, np.array([1.0, 2.0, 0.0]))
    moved = sg.apply_transform(scene, motion, sg.PermutationSet([[1, 0], [0, 1]]))
    assert moved.exists(1) and not moved.exists(0)
    np.testing.assert_allclose(moved.values[1:3, 1], [1.2, 2.5], atol=1e-12)
    back = sg.solve_procrustes(moved, sg.apply_transform(scene, sg.RigidMotion(), sg.PermutationSet([[1, 0], [0, 1]])))
    assert abs(back.theta - np.pi / 2) < 1e-12

    image = sg.project(scene, half_extent=2.0, resolution=32)
    assert image.shape == (32, 32)
    assert np.abs(image).sum() > 0
    assert sg.render_svg(scene).startswith("<svg") or "<svg" in sg.render_svg(scene)


def test_corpus_align_train_synth():
    corpus = sg.generate_corpus("bedroom", n=8, seed=3)
    assert len(corpus.scenes) == 8
    result = sg.align_corpus(corpus.scenes, k=3)
    assert len(result.aligned) == 8
    assert result.motions[0].theta == 0.0
    assert "edges" in json.loads(result.report())

    config = {"t_outer": 1, "t_inner": 1, "gen_epochs": 1, "disc_epochs": 1, "latent_iters": 2,
              "batch_size": 4, "width_scale": 0.02, "z_dim": 4, "image_resolution": 16, "image_channels": 2}
    model = sg.train(result.aligned, json.dumps(config))
    assert model.outer_done == 1
    assert model.consistency_violations == 0

    z = np.zeros(model.z_dim)
    a = model.synth(z)
    assert a == model.synth(z)
    batch = model.synth_batch(3, seed=5)
    assert len(batch) == 3
    assert [s.to_json() for s in batch] == [s.to_json() for s in model.synth_batch(3, seed=5)]
    assert model.encode(a).shape == (model.z_dim,)

    out = model.complete(a, restarts=1, iters=20)
    assert out["data_term"] >= 0.0
    assert out["scene"].values.shape == a.values.shape

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "m.bin")
        sg.save_checkpoint(path, model)
        again = sg.load_checkpoint(path)
        assert again.synth(z) == a


def test_cli_entry():
    assert sg.run_cli(["--help"]) == 0
    assert sg.run_cli(["-q", "no-such-command"]) == 1
