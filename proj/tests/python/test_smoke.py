import json

import numpy as np
import pytest

import neuroboot as nb

SMALL = {"n_subjects": 3, "n_trials_per_cell": 20, "n_channels": 8, "fs": 100.0,
         "effect_bio": 0.5, "effect_int": 1.5, "seed": 5}


def test_generate_is_deterministic():
    a = nb.generate_subject(SMALL, 0)
    b = nb.generate_subject(json.dumps(SMALL), 0)
    assert a == b
    assert a.data.shape == (80, 8, 170)
    assert sorted(set(a.label_codes)) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        nb.generate_subject(SMALL, 3)


def test_epochset_roundtrip(tmp_path):
    e = nb.generate_subject(SMALL, 1)
    path = tmp_path / "s.epb"
    e.save(path)
    back = nb.EpochSet.load(path)
    assert back.subject_id == e.subject_id
    # Files hold 32-bit floats.
    np.testing.assert_allclose(back.data, e.data, rtol=1e-6, atol=1e-6)
    built = nb.EpochSet("x", 100.0, -0.2, [0, 1], np.zeros((2, 1, 4)) + [1.0, 2.0, 3.0, 4.0])
    assert built.n_samples == 4


def test_preprocess_and_quality():
    e = nb.preprocess(nb.generate_subject(SMALL, 0), downsample=2)
    assert e.fs == 50.0
    q = nb.quality(e)
    assert set(q) == {"snr_db", "delta_erp"}
    with pytest.raises(ValueError):
        nb.preprocess(e, lowpass_hz=0.0, downsample=2)


def test_sub_average_matches_numpy():
    rng = np.random.default_rng(0)
    trials = rng.normal(size=(6, 2, 3))
    counts = nb.draw_counts([1, 1, 1, 3, 3, 3], 8, seed=4)
    assert sum(counts) == 8
    want = np.tensordot(np.array(counts, dtype=float), trials, axes=1) / 8
    np.testing.assert_allclose(nb.sub_average(trials, counts, 8), want, atol=1e-12)


def test_weights_and_augment():
    subjects = [nb.generate_subject(SMALL, i) for i in range(3)]
    w_bio, w_int = nb.topic_weights(subjects[1:])
    assert w_bio == 1.0 and w_int > 1.0
    probs = nb.weight_vector(subjects[0], "weighted", (w_bio, w_int))
    assert abs(sum(probs) - 1.0) < 1e-12
    aug = nb.augment(subjects[0], "weighted", k=4, L=20, weights=(w_bio, w_int))
    assert aug.n_trials == 20


def test_decode_window_rows():
    e = nb.generate_subject(dict(SMALL, effect_bio=2.0, effect_int=2.0), 0)
    rows = nb.decode_window(e, (0.3, 0.6), k=4, L=40)
    assert len(rows) == 5
    assert np.mean([r["accuracy"] for r in rows]) > 0.7


def test_stats():
    r = nb.paired_t([1.0, 2.0, 4.0], [0.0, 0.5, 1.0])
    assert r["df"] == 2 and 0 < r["p"] < 1
    assert nb.fdr_bh([0.001, 0.2, 0.04], 0.05) == [True, False, False]
    rng = np.random.default_rng(1)
    a = rng.normal(size=(6, 10))
    a[:, 3:6] += 3.0
    res = nb.cluster_permutation(a, np.zeros_like(a))
    assert res["exhaustive"] and res["n_permutations"] == 64
    assert res["clusters"]
    with pytest.raises(nb.Error):
        nb.paired_t([1.0, 2.0], [0.0, 1.0])


def test_run_experiment(tmp_path):
    cfg = nb.standard_config()
    assert cfg["L"] == 250
    minimal = {"synth": {"n_subjects": 2, "n_trials_per_cell": 20},
               "preprocess": {"downsample": 2}, "seeds": [1], "L": 40,
               "timecourses": [],
               "grid": [{"condition": "BI", "source": 40, "k": 4, "schemes": ["uniform"]}]}
    manifest = nb.run_experiment(minimal, tmp_path / "out")
    assert manifest["n_subjects"] == 2
    for name in ("quality.csv", "timecourse.csv", "table1.csv", "stats.csv"):
        assert (tmp_path / "out" / name).exists()
    with pytest.raises(ValueError):
        nb.run_experiment({"bogus": 1}, tmp_path / "bad")


def test_module_location():
    import os
    import sys
    stage = os.environ.get("NEUROBOOT_PY_STAGE")
    if stage:
        assert sys.modules["neuroboot._core"].__file__.startswith(stage)
