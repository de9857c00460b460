"""Acceptance suite: one test per criterion, reported in the terminal summary.

The long-horizon criteria (7 to 9) share one generated stream and one set of
runs through module-scoped fixtures; the whole module takes a few minutes.
"""
import itertools
import math

import numpy as np
import pytest

from mcdbf.bounds import lemma5_rhs, tau_constants
from mcdbf.cli import main
from mcdbf.core import predict_top_m
from mcdbf.data import SynthConfig, generate_separable
from mcdbf.harness import DataSpec, ExperimentSpec, compare, run_experiment
from mcdbf.learners import MCDBF, LabelOracle, diluted_update
from mcdbf.losses import avg_hinge, loss_lower_bound_gap, partial_zero_one
from mcdbf.sampling import arm_distribution, count_containing, enumerate_superarms, superarm_prob

from oracles import Banditron, brute_count, eq4_update, sort_top_m

GRID = [(k, m, g) for k in (3, 4, 5, 6) for m in (1, 2, 3) if m < k for g in (0.1, 0.3, 0.7)]

LONG_T = 200_000
SEEDS = tuple(range(10))
LONG_DATA = DataSpec(synthetic=SynthConfig(k=9, d=32, T=LONG_T, margin=1.0, seed=0))


def _random_round(rng, k, d=4):
    W = rng.standard_normal((k, d))
    x = rng.standard_normal(d)
    x /= max(1.0, np.linalg.norm(x))
    y = int(rng.integers(1, k + 1))
    return W, x, y


def _estimator_moments(W, x, y, k, m, g):
    """Exact first and second moments of the diluted estimate over all tuples."""
    greedy = predict_top_m(W, x, m)
    P = arm_distribution(greedy, k, g)
    tau1, tau2 = tau_constants(k, m)
    mean = np.zeros_like(W)
    second = 0.0
    for A in enumerate_superarms(k, m):
        z = superarm_prob(P, A)
        fb = int(y in A)
        U = diluted_update(x, greedy, A, fb, z, k, tau1, tau2)
        mean += z * U
        second += z * float(np.sum(U * U))
    return greedy, mean, second


@pytest.mark.criterion(1, "E_Z[U~] equals the full-information update within 1e-10 (exact enumeration)")
def test_criterion1_unbiased_estimator():
    rng = np.random.default_rng(1)
    worst = 0.0
    for k, m, g in GRID:
        for _ in range(20):
            W, x, y = _random_round(rng, k)
            _, mean, _ = _estimator_moments(W, x, y, k, m, g)
            worst = max(worst, float(np.max(np.abs(mean - eq4_update(W, x, y, m)))))
    print(f"max |E_Z[U~] - U| = {worst:.3e}")
    assert worst <= 1e-10


@pytest.mark.criterion(2, "sum of Z(A) is 1 within 1e-10 and Z(A) >= (gamma/k)^m on the grid")
def test_criterion2_normalization_and_floor():
    rng = np.random.default_rng(2)
    for k, m, g in GRID:
        for _ in range(20):
            greedy = tuple(int(a) + 1 for a in rng.permutation(k)[:m])
            P = arm_distribution(greedy, k, g)
            Z = [superarm_prob(P, A) for A in enumerate_superarms(k, m)]
            assert abs(math.fsum(Z) - 1.0) <= 1e-10
            assert min(Z) >= (g / k) ** m


@pytest.mark.criterion(3, "closed-form tuple count equals brute force for k <= 6, m <= 3")
def test_criterion3_counting_identity():
    for k in range(2, 7):
        for m in range(1, min(3, k - 1) + 1):
            for y, r in itertools.product(range(1, k + 1), repeat=2):
                assert count_containing(y, r, k, m) == brute_count(y, r, k, m)


@pytest.mark.criterion(4, "L_avg >= 1{y not in Yhat} and >= 1{y not in Yhat} - <W,U> over 1e4 draws")
def test_criterion4_loss_inequalities():
    rng = np.random.default_rng(4)
    for _ in range(10_000):
        k = int(rng.integers(2, 11))
        m = int(rng.integers(1, k))
        W, x, y = _random_round(rng, k, d=int(rng.integers(1, 8)))
        W *= rng.choice([0.01, 1.0, 10.0])
        top = sort_top_m(W @ x, m)
        loss = avg_hinge(W, x, y, m)
        assert loss >= partial_zero_one(y, top) - 1e-12
        assert loss_lower_bound_gap(W, eq4_update(W, x, y, m), x, y, m) >= -1e-12


@pytest.mark.criterion(5, "exact E_Z ||U~||_F^2 is at most the per-round bound on the grid")
def test_criterion5_frobenius_bound():
    rng = np.random.default_rng(5)
    for k, m, g in GRID:
        for _ in range(20):
            W, x, y = _random_round(rng, k)
            greedy, _, second = _estimator_moments(W, x, y, k, m, g)
            rhs = lemma5_rhs(k, m, g, float(x @ x), int(y not in greedy))
            assert second <= rhs * (1 + 1e-12)


@pytest.mark.criterion(6, "MC-DBF(m=1) and an independent Banditron give bit-identical weights over 1e4 rounds")
def test_criterion6_banditron_reduction():
    stream, _ = generate_separable(SynthConfig(k=9, d=32, T=10_000, seed=6))
    ours = MCDBF(9, 32, 1, 0.1, seed=2024)
    ref = Banditron(9, 32, 0.1, seed=2024)
    for x, y in stream.pairs():
        ours.step(x, LabelOracle(y))
        ref.step(x, y)
        assert np.array_equal(ours.W, ref.W)
    assert ours.t == 10_000 and np.any(ours.W != 0)


@pytest.fixture(scope="module")
def long_stream():
    return LONG_DATA.load(LONG_T)


@pytest.fixture(scope="module")
def long_dbf(long_stream):
    spec = ExperimentSpec("mc-dbf", LONG_DATA, LONG_T, m=2, gamma="auto", seeds=SEEDS, log_every=1000)
    return run_experiment(spec, loaded=long_stream)


@pytest.mark.criterion("7a", "separable k=9 m=2 T=2e5: mean set mistakes within the mistake bound")
def test_criterion7a_within_bound(long_dbf):
    print(f"gamma={long_dbf.gamma:.4f} R_T={long_dbf.R_T} D={long_dbf.D:.1f} "
          f"mean M={long_dbf.set_mistakes:.1f} bound={long_dbf.bound:.1f}")
    assert long_dbf.R_T == 0.0
    assert long_dbf.set_mistakes <= long_dbf.bound


@pytest.mark.criterion("7b", "log-log slope of cumulative set mistakes over the final decade <= 1 - 1/(m+2) + 0.1")
def test_criterion7b_sublinear_slope(long_dbf):
    t = long_dbf.checkpoints.astype(float)
    M = long_dbf.mean_set_mistakes
    tail = t >= LONG_T / 10
    if M[tail][0] == 0:
        slope = 0.0  # no mistakes in the final decade at all
    else:
        slope = float(np.polyfit(np.log(t[tail]), np.log(M[tail]), 1)[0])
    print(f"slope={slope:.4f} limit={1 - 1 / 4 + 0.1:.4f}")
    assert slope <= 1 - 1 / (2 + 2) + 0.1


@pytest.mark.criterion(8, "final error is nondecreasing in m over {2,4,6} (tolerance 0.01)")
def test_criterion8_monotone_in_m():
    T = 100_000
    data = DataSpec(synthetic=SynthConfig(k=9, d=32, T=T, margin=1.0, seed=0))
    specs = [ExperimentSpec("mc-dbf", data, T, m=m, gamma=0.2, seeds=SEEDS, log_every=10_000) for m in (2, 4, 6)]
    errors = [r.final_error for r in compare(specs)]
    print("final errors m=2,4,6:", errors)
    for lo, hi in zip(errors, errors[1:]):
        assert hi >= lo - 0.01


@pytest.mark.criterion(9, "|final error MC-DBF(m=2) - MC-SLP(m=2)| <= 0.05 on the criterion-7 stream")
def test_criterion9_close_to_full_information(long_stream, long_dbf):
    spec = ExperimentSpec("mc-slp", LONG_DATA, LONG_T, m=2, seeds=SEEDS, log_every=1000)
    slp = run_experiment(spec, loaded=long_stream)
    print(f"mc-dbf={long_dbf.final_error:.6f} mc-slp={slp.final_error:.6f}")
    assert abs(long_dbf.final_error - slp.final_error) <= 0.05


@pytest.mark.criterion(10, "replaying any manifest reproduces byte-identical CSV outputs")
def test_criterion10_replay_determinism(tmp_path):
    common = ["--k", "6", "--d", "16", "--T", "3000", "--seeds", "0-3", "--log-every", "500"]
    commands = {
        "run": ["run", "--algo", "mc-dbf", "--m", "2", "--gamma", "auto"],
        "sweep": ["sweep-gamma", "--algo", "banditron", "--gammas", "0.05,0.2,0.6"],
        "compare": ["compare", "--variant", "perceptron", "--variant", "mc-slp:m=3",
                    "--variant", "mc-dbf:m=3:gamma=0.3", "--loglog"],
    }
    for name, argv in commands.items():
        first, again = tmp_path / name, tmp_path / f"{name}-replay"
        assert main([*argv, *common, "--out", str(first)]) == 0
        assert main(["replay", str(first / "manifest.json"), "--out", str(again)]) == 0
        files = sorted(p.name for p in first.iterdir())
        assert "curves.csv" in files and "summary.csv" in files
        assert files == sorted(p.name for p in again.iterdir())
        for f in files:
            assert (first / f).read_bytes() == (again / f).read_bytes(), f"{name}/{f}"
