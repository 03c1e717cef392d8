import math

import numpy as np
import pytest

import l2t_hyena as lh


def direct_conv(u, h):
    B, L, C = u.shape
    y = np.zeros_like(u)
    for t in range(L):
        for s in range(t + 1):
            y[:, t, :] += h[s] * u[:, t - s, :]
    return y


def micro_config(tmp_path, **extra):
    root = tmp_path / "data"
    root.mkdir()
    lines = lh.synthetic_corpus(3800, 40, 1)
    (root / "train.txt").write_text("\n".join(lines[: len(lines) * 4 // 5]) + "\n")
    (root / "valid.txt").write_text("\n".join(lines[len(lines) * 4 // 5 :]) + "\n")
    values = {
        "train_path": str(root / "train.txt"),
        "valid_path": str(root / "valid.txt"),
        "output_dir": str(tmp_path / "run"),
        "dim": 8,
        "n_blocks": 1,
        "filter_hidden": 8,
        "filter_pos_dim": 5,
        "seq_len": 8,
        "batch_size": 4,
        "dln_hidden": 8,
        "teacher_widths": [16, 16],
        "activation_threshold": 4,
        "teacher_batch": 4,
        "epochs": 2,
        "warmup_epochs": 0.25,
        "deterministic": True,
    }
    values.update(extra)
    return lh.Config(values)


def test_fft_conv_matches_direct_sum():
    rng = np.random.default_rng(0)
    for L in (1, 3, 33):
        u = rng.standard_normal((2, L, 3))
        h = rng.standard_normal((L, 3))
        np.testing.assert_allclose(lh.fft_causal_conv(u, h), direct_conv(u, h), atol=1e-10)


def test_vocab_and_batches():
    lines = ["a b a", "c a"]
    v = lh.Vocab.build(lines, 10)
    assert "a" in v and v.id("zzz") == v.unk_id
    ids = v.encode(lines)
    assert len(ids) == 7 and ids[3] == v.eos_id
    assert v.decode(list(ids[:3])) == "a b a"
    batches = lh.make_batches(list(range(41)), 4, 3)
    assert len(batches) == lh.batch_count(41, 4, 3) == 3
    x, y = batches[0]
    assert x.shape == (4, 3)
    np.testing.assert_array_equal(y, x + 1)


def test_loss_identities():
    V = 13
    logits = np.zeros((2, 3, V))
    targets = np.array([[0, 1, 2], [3, 4, 12]], dtype=np.int32)
    assert lh.cross_entropy(logits, targets) == pytest.approx(math.log(V), abs=1e-12)
    f = lh.extract_features(logits, targets)
    assert f.shape == (3, 5)
    np.testing.assert_allclose(f[:, 3], 1.0)
    assert lh.huber(0.5, 0.0) == 0.125
    assert lh.huber(2.0, 0.0) == 1.5


def test_schedule_and_sampling():
    assert lh.cosine_warmup_lr(226, 1130, 226, 2e-4, 2e-6) == pytest.approx(2e-4, abs=1e-15)
    assert lh.cosine_warmup_lr(1130, 1130, 226, 2e-4, 2e-6) == pytest.approx(2e-6, abs=1e-15)
    picks = np.array(lh.sample_prioritized([1.0, 3.0], 20000, seed=3))
    assert abs(picks.mean() - 0.75) < 0.02


def test_config_round_trip_and_errors():
    c = lh.Config({"dim": 32, "mode": "baseline"})
    assert c["dim"] == "32"
    assert c["mode"] == "baseline"
    assert "student_lr" in lh.Config.keys()
    with pytest.raises(lh.ConfigError, match="student_weight_decay"):
        lh.Config({"student_weight_decay": -1})
    with pytest.raises(lh.ConfigError):
        lh.Config({"no_such_key": 1})


def test_model_forward_is_causal():
    cfg = lh.Config({"dim": 8, "n_blocks": 1, "filter_hidden": 8, "filter_pos_dim": 5, "seq_len": 6})
    model = lh.HyenaModel(cfg, vocab_size=11, seed=2)
    assert model.parameter_count == sum(a.size for a in model.arrays().values())
    x = np.array([[1, 2, 3, 4, 5, 6]], dtype=np.int32)
    a = model.forward(x)
    x[0, 4] = 9
    b = model.forward(x)
    assert a.shape == (1, 6, 11)
    np.testing.assert_allclose(a[:, :4], b[:, :4], rtol=0, atol=1e-5)
    assert not np.allclose(a[:, 4:], b[:, 4:])


def test_session_steps(tmp_path):
    cfg = micro_config(tmp_path)
    lines = (tmp_path / "data" / "train.txt").read_text().splitlines()
    v = lh.Vocab.build(lines, 10000)
    batches = lh.make_batches(list(v.encode(lines)), 4, 8)
    s = lh.Session(cfg, len(v), len(batches))
    first = s.train_step(*batches[0])
    assert first["step"] == 1 and not first["teacher_active"]
    for x, y in batches[1:10]:
        m = s.train_step(x, y)
        assert 0 < m["lambda"] < 1
    assert m["teacher_active"]
    assert s.steps_taken == 10
    ev = s.evaluate(batches[:3])
    assert ev["val_ppl"] == pytest.approx(math.exp(ev["val_loss"]), rel=1e-12)


def test_train_eval_compare(tmp_path):
    cfg = micro_config(tmp_path)
    metrics = lh.train(cfg)
    assert [e["epoch"] for e in metrics["epochs"]] == [1, 2]
    run = tmp_path / "run"
    assert (run / "best.l2th").exists() and (run / "metrics_epoch.csv").exists()
    ev = lh.evaluate_checkpoint(str(run / "best.l2th"), cfg)
    assert ev["val_ppl"] == pytest.approx(metrics["best_val_ppl"], rel=1e-6)
    report = lh.compare(str(run), str(run))
    assert report["ppl_reduction_abs"] == 0


def test_missing_corpus_names_path(tmp_path):
    cfg = micro_config(tmp_path, train_path="/nonexistent/ptb.train.txt")
    with pytest.raises(lh.DataError, match="/nonexistent/ptb.train.txt"):
        lh.train(cfg)
