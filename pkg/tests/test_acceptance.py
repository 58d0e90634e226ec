"""Acceptance suite: one test per shipping criterion, each printing a
PASS/FAIL line (run with ``pytest -s`` to see them live).

Settings mirror the shipped experiment configs; tolerances are pinned here
and nowhere else.
"""

import math
import time
from math import comb

import numpy as np

from goalskew.ablation import make_imbalanced_dataset, variance_ablation
from goalskew.agent import Transition, relabel, train_joint
from goalskew.density import Box, GridHistogramModel, fit_histogram
from goalskew.envs import FourRooms, Labyrinth
from goalskew.runner import run
from goalskew.skew import (SkewConfig, build_skewed_empirical, run_skew_refit,
                           sir_resample, skew_weights)
from goalskew.theory import (cov_log_densities, exact_skew, iterate_power_normalize,
                             random_full_support, verify_entropy_derivative,
                             verify_entropy_gain)


def report(number, name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'}  criterion {number} ({name}): {detail}")
    assert ok, f"criterion {number} ({name}): {detail}"


def _four_rooms_terminal_entropies(alpha, seeds, iterations=100, n_collect=500):
    env = FourRooms()
    cfg = SkewConfig(alpha=alpha, n_collect=n_collect, resample_size=5000,
                     goal_source="model")
    return [run_skew_refit(env, env.reach, cfg, iterations, seed).reports[-1].entropy_nats
            for seed in seeds]


def test_criterion_1_four_rooms_entropy():
    t0 = time.time()
    env = FourRooms()
    ceiling = math.log(len(env.valid_cells()))
    skewed = np.mean(_four_rooms_terminal_entropies(-1.0, range(9)))
    plain = np.mean(_four_rooms_terminal_entropies(0.0, range(9)))
    elapsed = time.time() - t0
    ok = skewed >= 0.95 * ceiling and plain <= skewed - 0.3
    report(1, "four-rooms entropy", ok,
           f"mean terminal entropy alpha=-1: {skewed:.4f} (>= {0.95 * ceiling:.4f}), "
           f"alpha=0: {plain:.4f} (gap {skewed - plain:.2f} >= 0.3), "
           f"{elapsed:.0f}s (< 120s target)")


def test_criterion_2_alpha_ordering():
    means = {alpha: np.mean(_four_rooms_terminal_entropies(alpha, range(5)))
             for alpha in (-1.0, -0.75, -0.5, -0.25, 0.0)}
    ok = all(means[a] > means[0.0] for a in means if a < 0)
    report(2, "alpha ordering", ok,
           "5-seed mean terminal entropy per alpha: "
           + ", ".join(f"{a:g}: {m:.3f}" for a, m in sorted(means.items())))


def test_criterion_3_entropy_derivative_identity():
    rng = np.random.default_rng(100)
    worst = 0.0
    passed = 0
    for _ in range(100):
        p = random_full_support(8, rng)
        q = random_full_support(8, rng)
        check = verify_entropy_derivative(p, q, h=1e-4)
        worst = max(worst, check.abs_error)
        passed += check.abs_error < 1e-5
    ok = passed == 100
    report(3, "entropy-derivative identity", ok,
           f"{passed}/100 pairs within 1e-5 (worst |error| = {worst:.2e})")


def test_criterion_4_entropy_gain():
    rng = np.random.default_rng(101)
    found = 0
    tried = 0
    while tried < 500:
        p = random_full_support(16, rng)
        q = random_full_support(16, rng)
        if cov_log_densities(p, q) <= 0:
            continue
        tried += 1
        found += verify_entropy_gain(p, q).passed
    hand = exact_skew([0.8, 0.2], [0.8, 0.2], -1.0)
    hand_ok = hand[0] == 0.5 and hand[1] == 0.5
    ok = found == 500 and hand_ok
    report(4, "entropy gain interval", ok,
           f"{found}/500 positive-covariance pairs gained entropy on the grid; "
           f"hand case (0.8, 0.2) self-skew -> {tuple(float(v) for v in hand)} exactly")


def test_criterion_5_power_iteration_convergence():
    rng = np.random.default_rng(102)
    converged = 0
    total = 0
    max_iters_used = 0
    for _ in range(50):
        p0 = random_full_support(16, rng)
        for gamma in (0.3, 0.5, 0.9):
            total += 1
            run_ = iterate_power_normalize(p0, gamma, max_iters=500, tol=1e-6)
            converged += run_.converged
            if run_.converged:
                max_iters_used = max(max_iters_used, run_.iterations_to_converge)
    ok = converged == total
    report(5, "power-iteration convergence", ok,
           f"{converged}/{total} runs reached TV < 1e-6 within 500 steps "
           f"(slowest: {max_iters_used}); entropy monotonicity enforced per step")


def test_criterion_6_pipeline_matches_exact_skew():
    rng = np.random.default_rng(103)
    bounds = Box(lo=(0.0, 0.0), hi=(10.0, 1.0))
    p = random_full_support(10, rng, floor=1e-3)
    q = random_full_support(10, rng, floor=1e-3)
    p_model = GridHistogramModel(bounds, (10, 1), p, floor=0.0)
    q_model = GridHistogramModel(bounds, (10, 1), q, floor=0.0)
    n = 100_000
    states = p_model.sample(n, seed=rng)
    weights = skew_weights(q_model, states, -1.0)
    skewed = build_skewed_empirical(states, weights)
    refit = fit_histogram(sir_resample(skewed, n, seed=rng), bounds=bounds,
                          resolution=(10, 1), floor=0.0)
    target = exact_skew(p, q, -1.0)
    l1 = np.abs(refit.cell_mass - target).sum()
    ok = l1 < 0.03
    report(6, "pipeline vs exact skew", ok,
           f"L1 distance between the resampled fit and the exact skew: {l1:.4f} < 0.03")


def test_criterion_7_variance_ablation():
    sir1, is1, sir3, is3 = [], [], [], []
    for seed in range(10):
        data, bounds = make_imbalanced_dataset(2000, seed=seed)
        res = variance_ablation(data, bounds, [-1.0, -3.0], draws=200,
                                seed=seed + 10_000)
        sir1.append(res[(-1.0, "SIR")])
        is1.append(res[(-1.0, "IS")])
        sir3.append(res[(-3.0, "SIR")])
        is3.append(res[(-3.0, "IS")])
    mild_ok = np.mean(sir1) <= np.mean(is1)
    ratio = np.mean(is3) / np.mean(sir3)
    ok = mild_ok and ratio > 10
    report(7, "gradient-variance ablation", ok,
           f"alpha=-1: var(SIR)={np.mean(sir1):.2e} <= var(IS)={np.mean(is1):.2e}; "
           f"alpha=-3: var(IS)/var(SIR) = {ratio:.1f} > 10 (10-seed means)")


def test_criterion_8_labyrinth_joint_training():
    t0 = time.time()
    env = Labyrinth.spiral_default()
    finals = {}
    for alpha in (-1.0, 0.0):
        cfg = SkewConfig(alpha=alpha, n_collect=15, resample_size=400,
                         goal_source="model")
        finals[alpha] = [train_joint(env, cfg, epochs=300, seed=seed,
                                     updates_per_transition=3).final_coverage
                         for seed in range(6)]
    wins = sum(a > b for a, b in zip(finals[-1.0], finals[0.0]))
    p_value = sum(comb(6, k) for k in range(wins, 7)) / 2 ** 6
    elapsed = time.time() - t0
    ok = (np.mean(finals[-1.0]) > np.mean(finals[0.0])) and p_value <= 0.05
    report(8, "labyrinth joint training", ok,
           f"final coverage alpha=-1: {finals[-1.0]} vs alpha=0: {finals[0.0]}; "
           f"{wins}/6 paired wins, one-sided sign test p = {p_value:.4f} <= 0.05, "
           f"{elapsed:.0f}s (< 600s target)")


def test_criterion_9_relabel_fractions():
    original = (9, 9)
    skewed = build_skewed_empirical(np.array([[5.0, 5.0]]), [1.0])
    tr = Transition((0, 0), 0, (0, 1), original, -1.0, False)
    future = [(1, 1), (2, 2)]
    rng = np.random.default_rng(104)
    counts = {"skewed": 0, "future": 0, "original": 0}
    n = 100_000
    for _ in range(n):
        goal = relabel(tr, future, skewed, rng)
        if goal == (5.0, 5.0):
            counts["skewed"] += 1
        elif goal == original:
            counts["original"] += 1
        else:
            counts["future"] += 1
    freqs = (counts["skewed"] / n, counts["future"] / n, counts["original"] / n)
    ok = all(abs(f - t) < 0.01 for f, t in zip(freqs, (0.5, 0.3, 0.2)))
    report(9, "relabeling fractions", ok,
           f"empirical frequencies {tuple(round(f, 4) for f in freqs)} "
           "within +-0.01 of (0.5, 0.3, 0.2)")


def test_criterion_10_deterministic_csvs(tmp_path):
    overrides = {"experiment": "four_rooms_oracle", "alpha_list": (-1.0, 0.0),
                 "seeds": (0, 1), "iterations": 5,
                 "skew.n_collect": 100, "skew.resample_size": 300}
    assert run(None, {**overrides, "out_dir": tmp_path / "first"}) == 0
    assert run(None, {**overrides, "out_dir": tmp_path / "second"}) == 0
    names = sorted(p.name for p in (tmp_path / "first").glob("*.csv"))
    identical = all((tmp_path / "first" / n).read_bytes()
                    == (tmp_path / "second" / n).read_bytes() for n in names)
    ok = identical and len(names) == 5
    report(10, "byte-identical reruns", ok,
           f"{len(names)} CSV files compared byte-for-byte across two runs")
