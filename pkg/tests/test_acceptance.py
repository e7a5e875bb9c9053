"""Acceptance gate: one test per criterion, each reporting PASS or FAIL in the summary."""

import json
import time

import numpy as np
import pytest

from featattn import cli, interpret, pipeline
from featattn.artifact import TIMESTAMP_FIELD, ModelArtifact, load_artifact, save_artifact
from featattn.data import Cohort, default_schema, generate_synthetic_cohort, segment_residual, smote, xor_signal
from featattn.gradcheck import run_gradcheck
from featattn.model import INFER, ModelConfig, forward, init_params
from featattn.numerics import RandomSource
from featattn.training import TrainConfig, predict_proba

from conftest import ACCEPTANCE_RESULTS, random_scaled_values

SEEDS = (0, 1, 2, 3, 4)
N_SIGNAL = 1000


def record(cid, text, ok, detail=""):
    ACCEPTANCE_RESULTS[cid] = (f"{text} {detail}".strip(), "PASS" if ok else "FAIL")
    assert ok, f"criterion {cid}: {text} {detail}"


def xor_cohort(seed):
    return generate_synthetic_cohort(default_schema(), N_SIGNAL, xor_signal(), RandomSource(seed))


@pytest.fixture(scope="module")
def runs():
    """Default-config runs for every seed and model kind on the XOR cohort."""
    out = {"time": {}}
    for kind in pipeline.ABLATIONS:
        start = time.perf_counter()
        for seed in SEEDS:
            model, report, prepared = pipeline.run(xor_cohort(seed), TrainConfig(seed=seed), ablation=kind)
            out[kind, seed] = (model, report, prepared)
        out["time"][kind] = time.perf_counter() - start
    return out


def val_accuracies(runs, kind):
    return np.array([runs[kind, s][1].final_val.accuracy for s in SEEDS])


def test_criterion_1_gradient_check():
    start = time.perf_counter()
    report = run_gradcheck(20, seed=0)
    elapsed = time.perf_counter() - start
    groups = {r.group for r in report.results}
    prefixes = {g.split(".")[0] for g in groups}
    covered = (
        {"attn.W", "attn.b", "attn.w", "out.W", "out.b"} <= groups
        and any(g.startswith("embed.") for g in groups)
        and {"dense0", "bn0", "dense1", "bn1"} <= prefixes
        and any(g.endswith(".gamma") for g in groups)
        and any(g.endswith(".beta") for g in groups)
    )
    ok = report.passed and report.worst.rel_error < 1e-4 and covered and elapsed < 60
    record(1, "gradcheck 20 configs", ok, f"worst={report.worst.rel_error:.2e} t={elapsed:.1f}s")


def test_criterion_2_attention_simplex_and_convexity():
    start = time.perf_counter()
    schema = default_schema()
    params = init_params(schema, ModelConfig(), RandomSource(21))
    values = random_scaled_values(schema, 1000, RandomSource(22))
    _, alpha, cache = forward(values, params, INFER)
    sums_ok = np.abs(alpha.sum(axis=1) - 1.0).max() <= 1e-9
    nonneg = alpha.min() >= 0.0
    lo, hi = cache.E.min(axis=1), cache.E.max(axis=1)
    hull = np.all(cache.h >= lo) and np.all(cache.h <= hi)
    elapsed = time.perf_counter() - start
    record(2, "attention simplex/convex hull on 1000 samples", sums_ok and nonneg and hull and elapsed < 10,
           f"t={elapsed:.2f}s")


def test_criterion_3_smote_arithmetic():
    start = time.perf_counter()
    schema = default_schema()
    rng = RandomSource(30)
    labels = np.zeros(296, dtype=np.int64)
    labels[rng.permutation(296)[:118]] = 1
    cohort = Cohort(schema, random_scaled_values(schema, 296, rng), labels, scaled=True)
    out = smote(cohort, 5, RandomSource(31))
    resid = segment_residual(out)
    elapsed = time.perf_counter() - start
    ok = len(out) == 356 and out.class_counts() == (178, 178) and resid <= 1e-9 and elapsed < 5
    record(3, "SMOTE 296 (118/178) -> 356 (178/178)", ok, f"residual={resid:.1e} t={elapsed:.2f}s")


@pytest.mark.slow
def test_criterion_4_signal_recovery(runs):
    accs = val_accuracies(runs, pipeline.ATTENTION)
    planted = set(xor_signal().features)
    hits = []
    for s in SEEDS:
        model, _, prepared = runs[pipeline.ATTENTION, s]
        ranking = interpret.global_importance(interpret.build_attention_report(model, prepared.stats, prepared.val))
        hits.append(len(planted & set(ranking.top(5))))
    elapsed = runs["time"][pipeline.ATTENTION]
    ok = np.median(accs) >= 0.85 and np.median(hits) >= 2 and elapsed < 300
    record(4, "XOR signal recovery", ok,
           f"median val acc={np.median(accs):.3f} planted-in-top5={hits} t={elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_5_baseline_ordering(runs):
    att = np.median(val_accuracies(runs, pipeline.ATTENTION))
    logi = np.median(val_accuracies(runs, pipeline.LOGISTIC))
    pool = np.median(val_accuracies(runs, pipeline.MEAN_POOL))
    elapsed = sum(runs["time"].values())
    ok = att - logi >= 0.10 and att - pool >= 0.0 and elapsed < 600
    record(5, "baseline ordering", ok,
           f"attention={att:.3f} logistic={logi:.3f} mean-pool={pool:.3f} t={elapsed:.0f}s")


def _strip_timestamp(path):
    doc = json.loads(path.read_text())
    doc.pop(TIMESTAMP_FIELD)
    return json.dumps(doc, sort_keys=True)


@pytest.mark.slow
def test_criterion_6_determinism(tmp_path):
    assert cli.main(["gen-data", "--out", str(tmp_path / "data"), "--seed", "6"]) == 0
    data = str(tmp_path / "data" / "cohort.csv")
    for run in ("a", "b"):
        assert cli.main(["train", "--data", data, "--out", str(tmp_path / run), "--seed", "6"]) == 0
    same_curves = (tmp_path / "a" / "curves.csv").read_bytes() == (tmp_path / "b" / "curves.csv").read_bytes()
    same_artifact = _strip_timestamp(tmp_path / "a" / "model.json") == _strip_timestamp(tmp_path / "b" / "model.json")
    record(6, "two identical train runs give identical curves and artifacts", same_curves and same_artifact)


@pytest.mark.slow
def test_criterion_7_persistence_round_trip(runs, tmp_path):
    model, report, prepared = runs[pipeline.ATTENTION, 0]
    values = random_scaled_values(default_schema(), 1000, RandomSource(70))
    before = predict_proba(model, values)
    save_artifact(ModelArtifact(default_schema(), prepared.stats, model, report.config, 0), tmp_path / "m.json")
    after = predict_proba(load_artifact(tmp_path / "m.json").model, values)
    diff = float(np.abs(after - before).max())
    record(7, "artifact round trip on 1000 samples", diff <= 1e-12, f"max diff={diff:.1e}")


@pytest.mark.slow
def test_criterion_8_batch_norm_inference_invariance(runs):
    model = runs[pipeline.ATTENTION, 0][0]
    schema = default_schema()
    rng = RandomSource(80)
    mismatches = 0
    for _ in range(50):
        batch = random_scaled_values(schema, 65, rng)
        pos = int(rng.integers(0, 65))
        alone = forward(batch[pos], model, INFER)
        inside = forward(batch, model, INFER)
        if alone[0][0] != inside[0][pos] or not np.array_equal(alone[1][0], inside[1][pos]):
            mismatches += 1
    record(8, "infer-mode prediction alone == inside batch of 64 companions", mismatches == 0,
           f"mismatches={mismatches}/50")


@pytest.mark.slow
def test_criterion_9_epoch_accounting(runs):
    problems = []
    for s in SEEDS:
        report = runs[pipeline.ATTENTION, s][1]
        tr, va = report.column("train_acc"), report.column("val_acc")
        if len(report.records) != 250:
            problems.append(f"seed {s}: {len(report.records)} records")
        if not (np.all((tr >= 0) & (tr <= 1)) and np.all((va >= 0) & (va <= 1))):
            problems.append(f"seed {s}: accuracy outside [0,1]")
        if tr[-1] < va[-1] - 0.05:
            problems.append(f"seed {s}: train {tr[-1]:.3f} < val {va[-1]:.3f} - 0.05")
    record(9, "250 epoch records, gap sanity", not problems, "; ".join(problems))


@pytest.mark.slow
def test_interacting_features_outrank_noise(runs):
    schema = default_schema()
    planted = set(xor_signal().features)
    margins = []
    for s in SEEDS:
        model, _, prepared = runs[pipeline.ATTENTION, s]
        mean_alpha = interpret.build_attention_report(model, prepared.stats, prepared.val).alpha.mean(axis=0)
        noise = max(mean_alpha[j] for j, name in enumerate(schema.names) if name not in planted)
        margins.append(min(mean_alpha[schema.index(n)] for n in xor_signal().interaction) - noise)
    assert np.median(margins) > 0


@pytest.mark.slow
def test_logistic_stays_near_chance_on_xor(runs):
    assert np.all(val_accuracies(runs, pipeline.LOGISTIC) <= 0.6)
    assert np.all(val_accuracies(runs, pipeline.ATTENTION) > 0.85)
