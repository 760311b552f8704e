"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -s`` (or ``-rA``) to see the report.
The convergence study behind criterion 7 runs once per session and takes a
few minutes; everything else is fast.
"""

import time

import numpy as np
import pytest

from knndiv.basis import TargetFunctional, fit_alpha, g_hellinger, get_target, r_k
from knndiv.experiments import SimulationConfig, emit_results, run_simulation
from knndiv.knn import NeighborIndex, SplitDataset, holdout_error_rate
from knndiv.model import (
    DistributionPair,
    GaussianSpec,
    LabeledDataset,
    functional_ground_truth_mc,
    hellinger_squared_gaussian,
    posterior_eta,
    sample,
)
from knndiv.weights import EnsembleConfig, constraint_exponents, exact_weights, relaxed_weights
from tests.test_knn import brute_force_neighbors
from tests.test_weights import bias_residuals, random_config

REFERENCE_PAIR = DistributionPair(
    class0=GaussianSpec(mu=0.0, beta=0.8, d=10),
    class1=GaussianSpec(mu=1.0, beta=0.9, d=10),
)
STUDY_SEED = 20250810  # fixed up front; every run of the suite replays it


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


def test_criterion_1_basis_exactness():
    grid = np.linspace(0.0, 1.0, 1001)
    gap_r1 = float(np.abs(r_k(grid, 1) - 2 * grid * (1 - grid)).max())
    edge_gap = max(
        max(abs(r_k(0.0, k)), abs(r_k(1.0, k)), abs(r_k(0.5, k) - 0.5))
        for k in (1, 3, 5, 7, 9)
    )
    ok = gap_r1 <= 1e-12 and edge_gap <= 1e-12
    report("1", ok, f"r_1 grid gap {gap_r1:.2e}, endpoint/center gap {edge_gap:.2e} (tol 1e-12)")


def test_criterion_2_one_nn_asymptotic_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(41)
    n = 5000
    points = np.concatenate([rng.uniform(0, 1, n), rng.uniform(0.5, 1.5, n)])[:, None]
    labels = np.repeat([0, 1], n)
    order = rng.permutation(2 * n)
    split = SplitDataset.from_dataset(LabeledDataset(points=points[order], labels=labels[order]))
    rate = holdout_error_rate(split, 1)
    elapsed = time.perf_counter() - start
    ok = abs(rate - 0.25) <= 0.02 and elapsed < 30.0
    report("2", ok, f"held-out 1-NN error {rate:.4f} vs 0.25 (tol 0.02), {elapsed:.1f}s (< 30s)")


def test_criterion_3_exact_weight_solver():
    rng = np.random.default_rng(12345)
    worst_sum = 0.0
    worst_bias = 0.0
    for _ in range(50):
        config = random_config(rng)
        solved = exact_weights(config)
        worst_sum = max(worst_sum, abs(float(solved.w.sum()) - 1.0))
        residuals = bias_residuals(config, solved.w)
        if residuals.size:
            worst_bias = max(worst_bias, float(residuals.max()))
    uniform_ok = True
    for d in (1, 2, 3, 4):
        config = EnsembleConfig(ls=(0.1, 0.4, 0.7, 1.0), d=d, n=200, lam=1.0)
        uniform_ok &= exact_weights(config).w.tolist() == [0.25] * 4
    ok = worst_sum <= 1e-8 and worst_bias <= 1e-8 and uniform_ok
    report(
        "3",
        ok,
        f"50 random configs: max sum residual {worst_sum:.2e}, max bias residual "
        f"{worst_bias:.2e} (tol 1e-8); d<=4 uniform exactly: {uniform_ok}",
    )


def test_criterion_4_epsilon_bound():
    # the optimality bound eps <= ||w0||^2 holds whenever (||w0||^2, w0) is
    # itself admissible for the relaxed program, which requires the variance
    # budget to accept w0, i.e. lambda >= 1; tested at lambda = 1
    rng = np.random.default_rng(54321)
    checked = 0
    worst_excess = -np.inf
    for _ in range(50):
        config = random_config(rng, lam=1.0)
        eps_star = exact_weights(config).epsilon
        eps = relaxed_weights(config).epsilon
        worst_excess = max(worst_excess, eps - eps_star)
        checked += 1
    ok = checked >= 50 and worst_excess <= 1e-9
    report(
        "4",
        ok,
        f"{checked} feasible configs at lambda=1: max(eps - ||w0||^2) = "
        f"{worst_excess:.3e} (tol 1e-9)",
    )


def test_criterion_5_hellinger_oracle_agreement():
    rng = np.random.default_rng(99)
    pairs = [REFERENCE_PAIR]
    for _ in range(5):
        d = int(rng.integers(2, 8))
        pairs.append(
            DistributionPair(
                class0=GaussianSpec(mu=float(rng.uniform(-1, 1)), beta=float(rng.uniform(-0.7, 0.7)), d=d),
                class1=GaussianSpec(mu=float(rng.uniform(-1, 1)), beta=float(rng.uniform(-0.7, 0.7)), d=d),
            )
        )
    n_mc = 10**6
    worst_sigmas = 0.0
    for i, pair in enumerate(pairs):
        closed = hellinger_squared_gaussian(pair)
        mc = functional_ground_truth_mc(pair, g_hellinger, n_mc, seed=1000 + i)
        eta = posterior_eta(pair, sample(pair, 200_000, seed=i).points)
        se = float(np.std(g_hellinger(np.asarray(eta)))) / np.sqrt(n_mc)
        worst_sigmas = max(worst_sigmas, abs(mc - closed) / se if se > 0 else 0.0)
    ok = worst_sigmas <= 3.0
    report(
        "5",
        ok,
        f"{len(pairs)} pairs (incl. the 10-d reference pair), 1e6 samples: "
        f"worst |closed-form - MC| = {worst_sigmas:.2f} MC standard errors (tol 3)",
    )


def test_criterion_6_basis_fit_recovery():
    target_r3 = TargetFunctional(name="r3", g=lambda e: r_k(e, 3))
    coeffs = fit_alpha(target_r3, (1, 3, 5))
    recovery_gap = float(np.abs(coeffs.alpha - np.array([0.0, 1.0, 0.0])).max())
    hellinger = get_target("hellinger")
    residuals = [fit_alpha(hellinger, ks).fit_residual for ks in [(1,), (1, 3), (1, 3, 5)]]
    strictly_decreasing = residuals[0] > residuals[1] > residuals[2]
    ok = recovery_gap <= 1e-8 and strictly_decreasing
    report(
        "6",
        ok,
        f"r_3 recovery gap {recovery_gap:.2e} (tol 1e-8); hellinger residuals "
        f"{residuals[0]:.5f} > {residuals[1]:.5f} > {residuals[2]:.5f}: {strictly_decreasing}",
    )


@pytest.fixture(scope="module")
def convergence_study():
    config = SimulationConfig(
        pair=REFERENCE_PAIR,
        target="hellinger",
        ks=(1, 3, 5, 7, 9),
        ls=tuple(np.geomspace(0.05, 0.5, 12)),
        lambdas=(0.1, 1.0),
        methods=("plain", "relaxed"),
        n_grid=(250, 500, 1000, 2000),
        trials=100,
        base_seed=STUDY_SEED,
        truth_mc_samples=10**6,
    )
    start = time.perf_counter()
    rows = run_simulation(config)
    elapsed = time.perf_counter() - start
    print(f"\n[criterion 7 setup] study of {config.trials} trials x {config.n_grid} ran in {elapsed:.0f}s")
    index = {(r.n, r.method, r.lam, r.quantity): r for r in rows}
    return config, index


def test_criterion_7a_r1_bias_ordering(convergence_study):
    config, index = convergence_study
    plain = abs(index[(2000, "plain", None, "R_1")].bias)
    details = [f"plain {plain:.5f}"]
    ok = True
    for lam in config.lambdas:
        relaxed = abs(index[(2000, "relaxed", lam, "R_1")].bias)
        details.append(f"relaxed(lam={lam}) {relaxed:.5f}")
        ok &= relaxed < plain
    report("7a", ok, "mean |bias| of R_1 at N=2000: " + ", ".join(details))


def test_criterion_7b_g_bias_ordering(convergence_study):
    # the lam=0.1 relaxed variant is the configured comparison against plain
    # for the combined estimate.
    # KNOWN LIMITATION: with the unconstrained least-squares basis
    # coefficients the combined estimate has a per-trial standard deviation
    # near 5, so a 100-trial mean locates the true bias only to about
    # +/-0.5 while the method biases differ by a few hundredths; this
    # comparison is noise dominated at the stipulated trial count and its
    # outcome is effectively a draw of the (fixed) seed. Kept at the stated
    # strength rather than weakened; full analysis in the decisions ledger.
    config, index = convergence_study
    plain = abs(index[(2000, "plain", None, "G")].bias)
    relaxed = abs(index[(2000, "relaxed", 0.1, "G")].bias)
    ok = relaxed < plain
    report(
        "7b",
        ok,
        f"mean |bias| of G at N=2000: plain {plain:.4f}, relaxed(lam=0.1) {relaxed:.4f}"
        + ("" if ok else " [noise-dominated comparison; see decisions ledger]"),
    )


def test_criterion_7c_mse_decreases_with_n(convergence_study):
    # KNOWN LIMITATION: for the lam=0.1 ensemble at k=9 the true MSE at
    # N=250 and N=2000 are equal to within half a percent (the smallest
    # subsamples at N=250 are 12-point 9-NN voters whose heavy bias happens
    # to cancel), so this endpoint comparison sits on a knife edge there;
    # kept at the stated strength, full analysis in the decisions ledger.
    config, index = convergence_study
    n_lo, n_hi = config.n_grid[0], config.n_grid[-1]
    quantities = [f"R_{k}" for k in config.ks] + ["G"]
    variants = [("plain", None)] + [("relaxed", lam) for lam in config.lambdas]
    failures = []
    for method, lam in variants:
        for q in quantities:
            lo = index[(n_lo, method, lam, q)].mse
            hi = index[(n_hi, method, lam, q)].mse
            if hi > lo:
                failures.append(f"{method}/{lam}/{q}: {lo:.4g} -> {hi:.4g}")
    ok = not failures
    report(
        "7c",
        ok,
        f"MSE from N={n_lo} to N={n_hi} non-increasing for all "
        f"{len(variants) * len(quantities)} estimator/quantity pairs"
        + ("" if ok else "; violations: " + "; ".join(failures)),
    )


def test_criterion_8_simulate_determinism(tmp_path):
    config = SimulationConfig(
        pair=REFERENCE_PAIR,
        target="hellinger",
        ks=(1, 3, 5),
        ls=tuple(np.geomspace(0.1, 0.5, 5)),
        lambdas=(1.0,),
        methods=("plain", "exact", "relaxed"),
        n_grid=(120,),
        trials=3,
        base_seed=77,
        truth_mc_samples=50_000,
    )
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_results(run_simulation(config), str(a))
    emit_results(run_simulation(config), str(b))
    ok = a.read_bytes() == b.read_bytes()
    report("8", ok, f"two runs, identical config and seed: byte-identical CSV = {ok}")


def test_criterion_9_neighbor_oracle_equivalence():
    rng = np.random.default_rng(2718)
    mismatches = 0
    for case in range(100):
        d = int(rng.choice([1, 2, 10]))
        n = int(rng.integers(20, 501))
        k = int(rng.integers(1, 10))
        points = rng.standard_normal((n, d))
        if case % 3 == 0:
            points[n // 2] = points[0]  # force a distance tie
        queries = np.vstack([rng.standard_normal((4, d)), points[:1]])
        mine = NeighborIndex(points).query(queries, k)
        if not np.array_equal(mine, brute_force_neighbors(points, queries, k)):
            mismatches += 1
    ok = mismatches == 0
    report("9", ok, f"100 random instances (d in 1/2/10, N<=500, k<=9): {mismatches} mismatches")
