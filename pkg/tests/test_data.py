import numpy as np
import pytest

from mcdbf.bounds import separability_certificate, zero_loss_comparator
from mcdbf.data import (
    Stream,
    SynthConfig,
    class_anchors,
    generate_separable,
    load_features,
    normalize_rows,
    write_features,
)
from mcdbf.errors import FeatureFileError, InvalidParameterError, RejectionBudgetExceeded
from mcdbf.learners import Perceptron, run_online


def test_generator_certificate():
    stream, W = generate_separable(SynthConfig(k=9, d=32, T=5000, seed=0))
    assert len(stream) == 5000 and stream.d == 32 and stream.k == 9
    ok, _ = separability_certificate(W, stream)
    assert ok
    assert separability_certificate(zero_loss_comparator(W, 2), stream, m=2) == (True, 0.0)
    assert np.all(np.linalg.norm(stream.X, axis=1) <= 1 + 1e-12)


def test_generator_deterministic():
    cfg = SynthConfig(k=5, d=12, T=700, seed=42)
    (s1, W1), (s2, W2) = generate_separable(cfg), generate_separable(cfg)
    assert np.array_equal(s1.X, s2.X) and np.array_equal(s1.y, s2.y) and np.array_equal(W1, W2)
    s3, _ = generate_separable(SynthConfig(k=5, d=12, T=700, seed=43))
    assert not np.array_equal(s1.X, s3.X)


def test_anchors_form_regular_simplex():
    V = class_anchors(6, 10, np.random.default_rng(0))
    G = V @ V.T
    np.testing.assert_allclose(np.diag(G), 1.0, atol=1e-12)
    off = G[~np.eye(6, dtype=bool)]
    np.testing.assert_allclose(off, -1 / 5, atol=1e-12)


def test_random_configs_separable_and_perceptron_bound():
    rng = np.random.default_rng(7)
    for i in range(100):
        k = int(rng.integers(2, 11))
        d = int(rng.integers(k, 65))
        cfg = SynthConfig(k=k, d=d, T=400, seed=i, margin=float(rng.uniform(1, 3)))
        stream, W = generate_separable(cfg)
        assert separability_certificate(W, stream)[0]
        metrics = run_online(Perceptron(k, d), stream, len(stream))
        assert metrics.top1_mistakes[-1] <= 2 * np.sum(W * W)


def test_label_marginals_uniform():
    k, T = 9, 100_000
    stream, _ = generate_separable(SynthConfig(k=k, d=32, T=T, seed=3))
    counts = np.bincount(stream.y, minlength=k + 1)[1:]
    sigma = np.sqrt(T * (1 / k) * (1 - 1 / k))
    assert np.all(np.abs(counts - T / k) <= 3 * sigma)


def test_noise_rate_breaks_separability():
    stream, W = generate_separable(SynthConfig(k=4, d=8, T=2000, seed=1, noise_rate=0.1))
    ok, R = separability_certificate(W, stream)
    assert not ok and R > 0


def test_rejection_budget():
    with pytest.raises(RejectionBudgetExceeded, match="smaller gap"):
        generate_separable(SynthConfig(k=9, d=32, T=100, gap=1.4, noise=3.0), max_draws=5000)


def test_config_validation():
    for kw in ({"d": 3, "k": 5}, {"margin": 0.5}, {"noise_rate": 1.0}, {"gap": 0.0}):
        with pytest.raises(InvalidParameterError):
            SynthConfig(**kw)


def test_stream_helpers():
    stream, _ = generate_separable(SynthConfig(k=3, d=4, T=20, seed=0))
    assert len(stream.head(5)) == 5
    a, b = stream.shuffled(1), stream.shuffled(1)
    assert np.array_equal(a.X, b.X) and sorted(a.y.tolist()) == sorted(stream.y.tolist())
    ex = next(iter(stream))
    assert np.array_equal(ex.features, stream.X[0]) and ex.label == stream.y[0]


GOLDEN = "3,2\n1,0.5,-0.25\n3,3.0,4.0\n2,0.1,0.2\n"


def test_golden_file_round_trip(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text(GOLDEN)
    raw = load_features(path, normalize=False)
    np.testing.assert_array_equal(raw.X, [[0.5, -0.25], [3.0, 4.0], [0.1, 0.2]])
    np.testing.assert_array_equal(raw.y, [1, 3, 2])
    norm = load_features(path)
    np.testing.assert_allclose(norm.X[1], [0.6, 0.8], atol=1e-15)
    np.testing.assert_array_equal(norm.X[0], raw.X[0])  # already inside the unit ball
    assert np.all(np.linalg.norm(norm.X, axis=1) <= 1 + 1e-12)


def test_write_then_load_is_exact(tmp_path):
    stream, _ = generate_separable(SynthConfig(k=4, d=6, T=50, seed=9))
    path = tmp_path / "s.csv"
    write_features(path, stream)
    back = load_features(path, normalize=False)
    assert np.array_equal(back.X, stream.X) and np.array_equal(back.y, stream.y) and back.k == 4


def test_empty_after_header(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("4,3\n")
    s = load_features(path)
    assert len(s) == 0 and s.d == 3 and s.k == 4


@pytest.mark.parametrize(
    "body,line",
    [
        ("3,2\n1,0.5\n", 2),
        ("3,2\n1,0.5,0.5\n2,abc,1\n", 3),
        ("3,2\n4,0.5,0.5\n", 2),
        ("3,2\n0,0.5,0.5\n", 2),
        ("3,2\n1,nan,0.5\n", 2),
        ("three,2\n", 1),
        ("", 1),
    ],
)
def test_malformed_files_report_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(FeatureFileError) as info:
        load_features(path)
    assert info.value.line == line
    assert f"{path}:{line}:" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(FeatureFileError):
        load_features(tmp_path / "nope.csv")


def test_normalize_rows():
    X = np.array([[3.0, 4.0], [0.3, 0.4], [0.0, 0.0]])
    np.testing.assert_allclose(normalize_rows(X), [[0.6, 0.8], [0.3, 0.4], [0.0, 0.0]])


def test_shuffled_load(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text(GOLDEN)
    a = load_features(path, shuffle_seed=4)
    b = Stream(load_features(path).X, load_features(path).y, 3).shuffled(4)
    assert np.array_equal(a.X, b.X)
