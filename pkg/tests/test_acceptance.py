"""Acceptance suite: one test per release criterion, each printing PASS/FAIL.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. The desk-scale training criterion dominates the runtime.
"""

import dataclasses
import time

import numpy as np
import gtpool.autodiff as ad
from gtpool.autodiff import Tensor
from gtpool.bench import bench_scale
from gtpool.datasets import build_features
from gtpool.model import GtPoolNet
from gtpool.pooling import GtPoolLayer, pool
from gtpool.rng import Rng
from gtpool.sampling import (
    SampleSpec,
    ScoreDistribution,
    brute_force_select,
    select,
)
from gtpool.synth import mutag_like
from gtpool.training import RunConfig, cross_validate, sweep, sweep_rows

from helpers import gradcheck, random_graph


def _report(num: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def test_criterion_1_sampler_oracle_equivalence():
    rng = np.random.default_rng(2024)
    mus = [0.25, 0.5, 0.75, 1.0]
    start = time.perf_counter()
    mismatches = 0
    for trial in range(10_000):
        n = int(rng.integers(1, 13))
        raw = rng.uniform(1e-4, 1.0, size=n)
        dist = ScoreDistribution(raw / raw.sum())
        mu = mus[trial % len(mus)]
        for method in ("rws", "rwsv", "topk"):
            spec = SampleSpec(mu, method)
            if select(dist, spec) != brute_force_select(dist, spec):
                mismatches += 1
    elapsed = time.perf_counter() - start
    _report(
        1,
        "sampler matches brute-force interval oracle",
        mismatches == 0 and elapsed < 5.0,
        f"10000 vectors x 3 methods, {mismatches} mismatches, {elapsed:.2f}s",
    )


def test_criterion_2_wheel_example_reproduction():
    dist = ScoreDistribution(np.array([0.10, 0.25, 0.30, 0.35]))
    got = {
        "rws": select(dist, SampleSpec(0.5, "rws")),
        "rwsv": select(dist, SampleSpec(0.5, "rwsv")),
        "topk": select(dist, SampleSpec(0.5, "topk")),
    }
    want = {"rws": [1, 3], "rwsv": [1, 2], "topk": [2, 3]}
    _report(
        2,
        "constructed wheel selects {b,d} / {b,c} / {c,d}",
        got == want,
        f"got {got}",
    )


def _op_cases(seed: int):
    """One gradcheck closure per differentiable op, freshly seeded."""
    rng = np.random.default_rng(seed)

    def p(shape, margin=0.0):
        arr = rng.normal(size=shape)
        if margin:
            arr += np.sign(arr) * margin  # keep away from relu/max kinks
        return Tensor(arr, requires_grad=True)

    def wsum(out, w):
        return ad.sum_all(ad.hadamard(out, Tensor(w)))

    a, b = p((4, 5)), p((4, 5), margin=0.05)
    m1, m2 = p((3, 4)), p((4, 2))
    col = Tensor(rng.uniform(0.5, 2.0, size=(4, 1)), requires_grad=True)
    bias_row = p((1, 5))
    gain, ln_bias = p((1, 5)), p((1, 5))
    logits = p((3, 4))
    labels = rng.integers(0, 4, size=3)
    w45 = rng.normal(size=(4, 5))
    w32 = rng.normal(size=(3, 2))
    w15 = rng.normal(size=(1, 5))
    w11 = rng.normal(size=(1, 1))
    w4_10 = rng.normal(size=(4, 10))
    w25 = rng.normal(size=(2, 5))

    return {
        "matmul": (lambda: wsum(ad.matmul(m1, m2), w32), [m1, m2]),
        "add": (lambda: wsum(ad.add(a, b), w45), [a, b]),
        "add_bias_row": (lambda: wsum(ad.add(a, bias_row), w45), [a, bias_row]),
        "sub": (lambda: wsum(ad.sub(a, b), w45), [a, b]),
        "hadamard": (lambda: wsum(ad.hadamard(a, b), w45), [a, b]),
        "scale": (lambda: wsum(ad.scale(a, 1.7), w45), [a]),
        "scale_rows": (lambda: wsum(ad.scale_rows(a, col), w45), [a, col]),
        "div_by_scalar": (
            lambda: wsum(ad.div_by_scalar(a, ad.sum_all(col)), w45),
            [a, col],
        ),
        "relu": (lambda: wsum(ad.relu(b), w45), [b]),
        "tanh": (lambda: wsum(ad.tanh(a), w45), [a]),
        "gelu": (lambda: wsum(ad.gelu(a), w45), [a]),
        "row_softmax": (lambda: wsum(ad.row_softmax(a), w45), [a]),
        "mean_rows": (lambda: wsum(ad.mean_rows(a), w15), [a]),
        "max_rows": (lambda: wsum(ad.max_rows(b), w15), [b]),
        "sum_all": (lambda: wsum(ad.sum_all(a), w11), [a]),
        "concat_cols": (lambda: wsum(ad.concat_cols([a, a]), w4_10), [a]),
        "gather_rows": (lambda: wsum(ad.gather_rows(a, [2, 0]), w25), [a]),
        "transpose": (lambda: wsum(ad.transpose(a), w45.T), [a]),
        "layer_norm": (
            lambda: wsum(ad.layer_norm(a, gain, ln_bias), w45),
            [a, gain, ln_bias],
        ),
        "dropout": (
            lambda: wsum(ad.dropout(a, 0.3, Rng(seed), train=True), w45),
            [a],
        ),
        "cross_entropy": (lambda: ad.cross_entropy(logits, labels), [logits]),
    }


def test_criterion_3_gradient_fidelity():
    start = time.perf_counter()
    worst = 0.0
    checked = set()
    for seed in range(20):
        for name, (loss, params) in _op_cases(3000 + seed).items():
            worst = max(worst, gradcheck(loss, params, tol=1e-4))
            checked.add(name)

    for seed in range(20):
        rng = np.random.default_rng(7000 + seed)
        net = GtPoolNet(
            in_dim=3, num_classes=2, hidden=4, layers=2, heads=2, rng=Rng(seed)
        )
        g = random_graph(6, 3, rng)
        g.label = int(rng.integers(0, 2))
        frozen = [p.idx for p in net.forward(g).pools]

        def loss():
            out = net.forward(g, frozen_indices=frozen)
            return ad.cross_entropy(out.logits, [g.label])

        worst = max(worst, gradcheck(loss, net.parameters(), tol=1e-4))
    elapsed = time.perf_counter() - start
    _report(
        3,
        "finite differences confirm every op and the composed pipeline",
        worst < 1e-4 and elapsed < 120.0,
        f"{len(checked)} ops + pipeline x 20 seeds, worst rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_4_structural_invariants():
    rng = np.random.default_rng(99)
    violations = []
    for trial in range(1000):
        n = int(rng.integers(1, 31))
        g = random_graph(n, 8, rng, edge_prob=float(rng.uniform(0.1, 0.9)))
        mu = float(rng.choice([0.25, 0.5, 0.75, 1.0]))
        method = str(rng.choice(["rws", "rwsv", "topk"]))
        layer = GtPoolLayer(8, 2, Rng(int(rng.integers(1 << 30))), mu=mu, method=method)
        adj = g.dense_adjacency()
        res = pool(layer, g.x, adj)
        m = int(np.ceil(mu * n))
        idx = res.idx
        if len(idx) != m or len(set(idx.tolist())) != m:
            violations.append((trial, "size"))
        if (np.diff(idx) <= 0).any() if m > 1 else False:
            violations.append((trial, "order"))
        if idx.min() < 0 or idx.max() >= n:
            violations.append((trial, "range"))
        if not np.array_equal(res.a_prime, res.a_prime.T):
            violations.append((trial, "symmetry"))
        if not np.array_equal(res.a_prime, adj[np.ix_(idx, idx)]):
            violations.append((trial, "induced"))
        if abs(res.scores.s.sum() - 1.0) > 1e-9:
            violations.append((trial, "score-sum"))
        for refined in res.refined_attention:
            if np.abs(refined.data.sum(axis=1) - 1.0).max() > 1e-9:
                violations.append((trial, "attention-rows"))
    _report(
        4,
        "pooled graphs keep size/order/adjacency/attention invariants",
        not violations,
        f"1000 graphs, violations: {violations[:5]}",
    )


def test_criterion_5_desk_scale_training():
    dataset = build_features(mutag_like(seed=0))
    config = RunConfig(seed=0)  # default configuration, wheel-variant sampler
    cpu_start = time.process_time()
    report = cross_validate(config, dataset)
    cpu_minutes = (time.process_time() - cpu_start) / 60.0
    mean = report.mean_accuracy
    ok = mean is not None and mean >= 0.75 and cpu_minutes < 15.0
    _report(
        5,
        "10-fold run on the bundled collection clears 75% accuracy",
        ok,
        f"mean {100 * (mean or 0):.2f}% ± {100 * (report.std_accuracy or 0):.2f}%, "
        f"majority 66.5%, {cpu_minutes:.1f} CPU-min",
    )


def test_criterion_6_ablation_harness():
    dataset = build_features(mutag_like(seed=0))
    config = RunConfig(hidden=16, heads=2, epochs=1, patience=1, seed=0)
    sampler_values = ["topk", "rws", "rwsv"]
    sampler_reports = sweep(config, dataset, "sampler", sampler_values)
    lam_values = [round(0.1 * i, 1) for i in range(11)]
    lam_reports = sweep(config, dataset, "lam", lam_values)

    sampler_rows = sweep_rows("sampler", sampler_values, sampler_reports)
    lam_rows = sweep_rows("lam", lam_values, lam_reports)
    ok = (
        len(sampler_reports) == 3
        and len(lam_reports) == 11
        and all(len(r.folds) == 10 for r in sampler_reports + lam_reports)
        and all(row["mean_accuracy"] is not None for row in sampler_rows + lam_rows)
    )
    _report(
        6,
        "sampler and weight sweeps emit table-shaped reports",
        ok,
        f"{len(sampler_rows)} sampler rows, {len(lam_rows)} weight rows",
    )


def test_criterion_7_determinism():
    dataset = build_features(mutag_like(seed=0))
    dataset.graphs = [g for g in dataset.graphs if g.label == 0][:20] + [
        g for g in dataset.graphs if g.label == 1
    ][:20]
    config = RunConfig(hidden=16, heads=2, epochs=2, patience=2, seed=11)
    a = cross_validate(config, dataset)
    b = cross_validate(dataclasses.replace(config), dataset)
    ok = (
        [f.test_accuracy for f in a.folds] == [f.test_accuracy for f in b.folds]
        and [f.train_curve for f in a.folds] == [f.train_curve for f in b.folds]
        and [f.val_curve for f in a.folds] == [f.val_curve for f in b.folds]
    )
    _report(7, "identical config and seed reproduce accuracies and losses", ok)


def test_criterion_8_scalability_trend():
    cells = bench_scale([500, 1000], [0.2, 0.4], seed=3)
    by_key = {(c["nodes"], round(c["density"], 2)): c["milliseconds"] for c in cells}
    numeric = {k: v for k, v in by_key.items() if isinstance(v, float)}
    oom = [k for k, v in by_key.items() if v == "OOM"]
    trend_ok = (
        (1000, 0.4) in numeric
        and (500, 0.2) in numeric
        and numeric[(1000, 0.4)] > numeric[(500, 0.2)]
    )
    ok = len(by_key) == 4 and trend_ok
    _report(
        8,
        "benchmark completes and runtime grows with graph size",
        ok,
        ", ".join(
            f"{k}={v:.0f}ms" if isinstance(v, float) else f"{k}=OOM"
            for k, v in sorted(by_key.items())
        ),
    )
