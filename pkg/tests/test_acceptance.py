"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The terminal summary repeats all lines in criterion order.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy.stats import kstwo

import oracles
from minrenyi import cli
from minrenyi.bounds import entangled_input_bound, mixture_bound
from minrenyi.channels import (
    apply,
    complex_conjugate,
    conjugate_apply,
    sample_channel,
    tensor_apply,
)
from minrenyi.entropy_min import (
    MinimizationConfig,
    _Objective,
    _SingleMap,
    brute_force_min,
    minimize_output_entropy,
    riemannian_gradient,
)
from minrenyi.montecarlo import concentration_experiment, decompose_relative
from minrenyi.quantum import (
    RngStream,
    eigenvalues,
    maximally_entangled,
    pure_density,
    random_pure_state,
    renyi_entropy,
    sample_weights,
    von_neumann_entropy,
)
from minrenyi.records import read_rows


def run_cli(args, out):
    code = cli.main([*args, "--out", str(out)])
    assert code == 0
    runs = sorted(out.iterdir(), key=lambda p: p.stat().st_mtime)
    return runs[-1]


def test_critical_constants(tmp_path, acceptance_report):
    t0 = time.perf_counter()
    run_dir = run_cli(["critical"], tmp_path)
    elapsed = time.perf_counter() - t0
    m = json.loads((run_dir / "record.json").read_text())["metrics"]
    checks = [
        abs(m["p0"] - oracles.PUBLISHED_P0) <= 2e-3,
        abs(m["h0"] - oracles.PUBLISHED_H0) <= 1e-3,
        abs(m["y0"] - oracles.PUBLISHED_Y0) <= 6e-3,
        abs(m["y0"] - oracles.GRID_Y0) <= 1e-6,
        abs(m["h0"] - oracles.GRID_H0) <= 1e-6,
        abs(m["p0"] - oracles.GRID_P0) <= 1e-6,
        elapsed < 1.0,
    ]
    detail = f"y0={m['y0']:.7f} h0={m['h0']:.7f} p0={m['p0']:.7f}, {elapsed:.3f}s"
    assert acceptance_report(1, "critical constants", all(checks), detail)


def test_spectral_equivalence(acceptance_report):
    t0 = time.perf_counter()
    root = RngStream(101)
    worst = 0.0
    same_rank = True
    for i in range(100):
        s = root.child(i)
        gen = s.generator()
        D, N = int(gen.integers(2, 6)), int(gen.integers(4, 17))
        ch = sample_channel(D, N, s.child(0))
        psi = random_pure_state(N, s.child(1))
        a = eigenvalues(apply(ch, pure_density(psi)))
        b = eigenvalues(conjugate_apply(ch, psi))
        a, b = np.sort(a[a > 1e-10]), np.sort(b[b > 1e-10])
        if a.shape != b.shape:
            same_rank = False
            continue
        worst = max(worst, float(np.max(np.abs(a - b))))
    elapsed = time.perf_counter() - t0
    ok = same_rank and worst <= 1e-8 and elapsed < 10
    assert acceptance_report(2, "spectral equivalence", ok, f"max diff {worst:.2e}, {elapsed:.1f}s")


def test_entangled_bound_chain(acceptance_report):
    t0 = time.perf_counter()
    root = RngStream(202)
    orders = (0.1, 0.2855, 0.5, 0.9)
    worst_first = worst_second = -math.inf
    worst_uniform = 0.0
    for i in range(100):
        s = root.child(i)
        gen = s.generator()
        D, N = int(gen.integers(2, 7)), int(gen.integers(4, 13))
        ch = sample_channel(D, N, s.child(0))
        out = tensor_apply(ch, complex_conjugate(ch), pure_density(maximally_entangled(N)))
        lam = eigenvalues(out)
        uniform = np.full(D, 1.0 / D)
        for p in orders:
            h = renyi_entropy(lam, p)
            mix = mixture_bound(ch.weights, p)
            bound = entangled_input_bound(D, p)
            worst_first = max(worst_first, h - mix)
            worst_second = max(worst_second, mix - bound)
            worst_uniform = max(worst_uniform, abs(mixture_bound(uniform, p) - bound))
    elapsed = time.perf_counter() - t0
    ok = worst_first <= 1e-9 and worst_second <= 1e-9 and worst_uniform <= 1e-12 and elapsed < 60
    detail = (
        f"max H-mix {worst_first:.2e}, max mix-bound {worst_second:.2e}, "
        f"uniform diff {worst_uniform:.1e}, {elapsed:.1f}s"
    )
    assert acceptance_report(3, "entangled-input bound chain", ok, detail)


@pytest.mark.slow
def test_optimizer_matches_grid_oracle(acceptance_report):
    t0 = time.perf_counter()
    root = RngStream(303)
    worst = 0.0
    for i in range(20):
        D = 2 + i % 2
        ch = sample_channel(D, 2, root.child(i).child(0))
        for p in (0.3, 0.5):
            est = minimize_output_entropy(ch, p, MinimizationConfig(), root.child(i).child(1))
            worst = max(worst, abs(est.value - brute_force_min(ch, p, 400)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and elapsed < 120
    assert acceptance_report(4, "optimizer vs grid oracle", ok, f"max diff {worst:.2e}, {elapsed:.1f}s")


def test_entropy_identities(acceptance_report):
    t0 = time.perf_counter()
    worst_mixed = 0.0
    for d in range(1, 33):
        for p in (0.25, 0.5, 0.75):
            worst_mixed = max(worst_mixed, abs(renyi_entropy(np.full(d, 1.0 / d), p) - math.log(d)))
    gen = RngStream(505).generator()
    worst_vn = 0.0
    for _ in range(100):
        v = gen.random(int(gen.integers(1, 17)))
        v /= v.sum()
        h1 = von_neumann_entropy(v)
        for p in (1 - 1e-4, 1 + 1e-4):
            worst_vn = max(worst_vn, abs(renyi_entropy(v, p) - h1))
    elapsed = time.perf_counter() - t0
    ok = worst_mixed <= 1e-12 and worst_vn <= 5e-4 and elapsed < 1
    detail = f"ln d error {worst_mixed:.1e}, p~1 error {worst_vn:.1e}, {elapsed:.3f}s"
    assert acceptance_report(5, "entropy identities", ok, detail)


def test_weight_law(acceptance_report):
    t0 = time.perf_counter()
    D, N, n = 4, 8, 100_000
    w = sample_weights(D, N, RngStream(606), size=n)
    se = w.std(axis=0, ddof=1) / math.sqrt(n)
    mean_ok = bool(np.all(np.abs(w.mean(axis=0) - 1 / D) <= 5 * se))
    target = (D - 1) / (D * D * (D * N + 1))
    var = w.var(axis=0, ddof=1)
    var_ok = bool(np.all(np.abs(var / target - 1) <= 0.05))
    elapsed = time.perf_counter() - t0
    ok = mean_ok and var_ok and elapsed < 10
    detail = f"max |mean-1/4|/se {np.max(np.abs(w.mean(axis=0) - 0.25) / se):.2f}, var ratio {var.min() / target:.4f}..{var.max() / target:.4f}"
    assert acceptance_report(6, "weight law", ok, detail)


@pytest.mark.slow
def test_concentration_scaling(acceptance_report):
    t0 = time.perf_counter()
    reports = concentration_experiment(3, [64, 128, 256], 100, RngStream(707))
    elapsed = time.perf_counter() - t0
    med = [r.median_deviation for r in reports]
    scaled = [r.scaled_median for r in reports]
    decreasing = med[0] > med[1] > med[2]
    band = max(scaled) / min(scaled) <= 3.0
    ok = decreasing and band and elapsed < 180
    detail = f"medians {', '.join(f'{m:.4f}' for m in med)}; scaled {', '.join(f'{s:.3f}' for s in scaled)}; {elapsed:.1f}s"
    assert acceptance_report(7, "concentration scaling", ok, detail)


def test_overlap_law(acceptance_report):
    t0 = time.perf_counter()
    n = 100_000
    crit = float(kstwo.ppf(0.99, n))
    stats = []
    for N in (2, 4, 8):
        s = RngStream(808).child(N)
        psi0 = random_pure_state(N, s.child(0))
        chis = random_pure_state(N, s.child(1), size=n)
        x2 = np.sort([decompose_relative(c, psi0)[0] ** 2 for c in chis])
        cdf = x2 ** (N - 1)
        k = np.arange(1, n + 1)
        stats.append(float(max(np.max(k / n - cdf), np.max(cdf - (k - 1) / n))))
    elapsed = time.perf_counter() - t0
    ok = max(stats) < crit and elapsed < 30
    detail = f"KS {', '.join(f'{d:.4f}' for d in stats)} vs {crit:.4f}, {elapsed:.1f}s"
    assert acceptance_report(8, "overlap law", ok, detail)


def test_gradient_check(acceptance_report):
    t0 = time.perf_counter()
    root = RngStream(909)
    orders = (0.15, 0.3, 0.5, 0.75, 1.0, 2.0)
    worst, points, i = 0.0, 0, 0
    while points < 50:
        s = root.child(i)
        i += 1
        gen = s.generator()
        D, N = int(gen.integers(2, 5)), int(gen.integers(3, 7))
        p = orders[points % len(orders)]
        ch = sample_channel(D, N, s.child(0))
        psi = random_pure_state(N, s.child(1))
        lam = eigenvalues(conjugate_apply(ch, psi))
        if lam[-1] < 1e-3 or np.min(-np.diff(lam)) < 1e-3:
            continue
        g = riemannian_gradient(ch, psi, p)
        ref = _Objective(_SingleMap(ch), p).fd_gradient(psi, 1e-6)
        ref = ref - np.real(np.vdot(psi, ref)) * psi
        worst = max(worst, float(np.linalg.norm(g - ref) / np.linalg.norm(ref)))
        points += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and elapsed < 10
    assert acceptance_report(9, "gradient check", ok, f"max rel error {worst:.2e}, {elapsed:.2f}s")


DETERMINISM_RUNS = [
    ["critical"],
    ["bound", "--kraus", "3", "--p", "0.4"],
    ["scan", "--kraus", "3"],
    ["sample-channel", "--kraus", "3", "--dim", "5", "--seed", "4"],
    ["minimize", "--kraus", "3", "--dim", "4", "--p", "0.3", "--starts", "3", "--seed", "5"],
    ["violation-search", "--kraus", "2", "--dim", "3", "--p", "0.2", "--channels", "2",
     "--starts", "2", "--max-iters", "200", "--seed", "6"],
    ["concentration", "--kraus", "3", "--dim", "8", "16", "--trials", "10", "--seed", "7"],
    ["near-event", "--kraus", "3", "--dim", "6", "--p", "0.5", "--trials", "20", "--starts", "2", "--seed", "8"],
]


def test_cli_determinism(tmp_path, monkeypatch, acceptance_report):
    covered = {args[0] for args in DETERMINISM_RUNS}
    all_commands = set(cli.build_parser()._subparsers._group_actions[0].choices)
    mismatched = []
    for args in DETERMINISM_RUNS:
        outputs = []
        for rep, threads in enumerate(("1", "3")):
            monkeypatch.setenv("MINRENYI_THREADS", threads)
            run_dir = run_cli(args, tmp_path / f"{args[0]}-{rep}")
            outputs.append((run_dir.name, (run_dir / "rows.jsonl").read_bytes()))
        if outputs[0] != outputs[1]:
            mismatched.append(args[0])
    ok = covered == all_commands and not mismatched
    detail = f"{len(covered)} subcommands, mismatched: {mismatched or 'none'}"
    assert acceptance_report(10, "CLI determinism", ok, detail)


@pytest.mark.slow
def test_violation_search_soundness(tmp_path, acceptance_report):
    t0 = time.perf_counter()
    problems = []
    summaries = []
    for N in (8, 16, 32):
        run_dir = run_cli(
            ["violation-search", "--kraus", "4", "--dim", str(N), "--p", "0.15",
             "--channels", "10", "--starts", "2", "--max-iters", "500", "--seed", "1111"],
            tmp_path / f"n{N}",
        )
        rows = [r["metrics"] for r in read_rows(run_dir / "rows.jsonl")]
        record = json.loads((run_dir / "record.json").read_text())
        if len(rows) != 10:
            problems.append(f"N={N}: {len(rows)} rows")
        for r in rows:
            if not (r["h2"] <= r["h_phi"] + 1e-9 and r["h2"] <= 2 * r["h1"] + 1e-9):
                problems.append(f"N={N}: candidate inclusion violated")
            if not math.isfinite(r["gap"]):
                problems.append(f"N={N}: non-finite gap")
        if not {"min_gap", "median_gap"} <= set(record["metrics"]):
            problems.append(f"N={N}: summary missing")
        summaries.append(f"N={N} min gap {record['metrics']['min_gap']:.1e}")
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 600
    detail = "; ".join(problems or summaries) + f"; {elapsed:.0f}s"
    assert acceptance_report(11, "violation-search soundness", ok, detail)
