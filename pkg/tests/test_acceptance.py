"""Acceptance gate: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v` for the per-criterion
pass/fail listing. The full-scale reproduction is a documented
long-running script (scripts/full_scale_reproduction.py) and is skipped
here unless SIMREC_FULL_SCALE points at the published dataset.
"""

import json
import math
import os
import time

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from simrec.contrastive import info_nce_loss, similarity_matrix
from simrec.corpus import COMBO_ORDER, compose_features, FeatureCombo
from simrec.evaluation import accuracy_at_k, run_sweep
from simrec.heads import PaperInfoHead, ScopeFusionHead, forward_p, forward_ps
from simrec.recommender import DownstreamConfig, recommend_top_k
from simrec.synthetic import write_synthetic_corpus

from test_contrastive import loop_loss
from test_heads import loop_forward_p, loop_forward_ps, finite_difference_check


def report(line: str) -> None:
    print(f"[acceptance] {line}")


def random_similarities(rng, n, dim):
    h = torch.from_numpy(rng.normal(size=(n, dim)))
    h_plus = torch.from_numpy(rng.normal(size=(n, dim)))
    return similarity_matrix(h, h_plus)


class TestLossOracle:
    def test_criterion_loss_matches_double_loop_on_100_batches(self):
        """info_nce_loss == unvectorized double-loop within 1e-6, < 5 s."""
        rng = np.random.default_rng(2024)
        started = time.monotonic()
        for _ in range(100):
            n = int(rng.integers(1, 9))
            dim = int(rng.integers(2, 17))
            tau = float(rng.uniform(0.05, 1.0))
            sims = random_similarities(rng, n, dim)
            vectorized = float(info_nce_loss(sims, tau))
            oracle = loop_loss(sims.tolist(), tau)
            assert abs(vectorized - oracle) <= 1e-6
        elapsed = time.monotonic() - started
        assert elapsed < 5.0
        report(f"PASS loss oracle: 100 batches within 1e-6 in {elapsed:.2f}s")


class TestAnalyticInvariants:
    def test_criterion_uniform_batch_is_log_n(self):
        for n in range(2, 9):
            sims = torch.full((n, n), 0.42, dtype=torch.float64)
            assert float(info_nce_loss(sims, 0.05)) == pytest.approx(
                math.log(n), abs=1e-6)
        report("PASS invariant: uniform-similarity batch loss = ln N (1e-6)")

    def test_criterion_single_pair_loss_zero(self):
        sims = torch.tensor([[0.77]], dtype=torch.float64)
        assert float(info_nce_loss(sims, 0.05)) == 0.0
        report("PASS invariant: N=1 loss = 0")

    def test_criterion_loss_non_negative(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            sims = random_similarities(rng, n, 8)
            assert float(info_nce_loss(sims, 0.1)) >= 0.0
        report("PASS invariant: loss >= 0 on all random batches")

    def test_criterion_joint_permutation_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            h = torch.from_numpy(rng.normal(size=(n, 12)))
            hp = torch.from_numpy(rng.normal(size=(n, 12)))
            perm = torch.from_numpy(rng.permutation(n))
            base = float(info_nce_loss(similarity_matrix(h, hp), 0.07))
            permuted = float(info_nce_loss(similarity_matrix(h[perm], hp[perm]), 0.07))
            assert abs(base - permuted) <= 1e-12
        report("PASS invariant: joint permutation invariance (1e-12)")

    def test_criterion_cosine_scale_invariance(self):
        rng = np.random.default_rng(8)
        for scale in (1e-3, 0.5, 42.0, 1e4):
            h = torch.from_numpy(rng.normal(size=(6, 10)))
            hp = torch.from_numpy(rng.normal(size=(6, 10)))
            base = float(info_nce_loss(similarity_matrix(h, hp), 0.05))
            scaled = float(info_nce_loss(similarity_matrix(scale * h, hp), 0.05))
            assert abs(base - scaled) <= 1e-9
        report("PASS invariant: cosine scale invariance (1e-9)")


class TestGradientChecks:
    def test_criterion_gradients_match_finite_differences(self):
        """Loss wrt similarities plus both heads' CE wrt all params, < 30 s."""
        started = time.monotonic()
        rng = np.random.default_rng(31)
        step = 1e-5

        # contrastive loss wrt similarity entries
        for _ in range(4):
            sims = torch.from_numpy(rng.uniform(-0.9, 0.9, size=(4, 4)))
            sims.requires_grad_(True)
            (analytic,) = torch.autograd.grad(info_nce_loss(sims, 0.3), sims)
            for i in range(4):
                for j in range(4):
                    plus = sims.detach().clone()
                    plus[i, j] += step
                    minus = sims.detach().clone()
                    minus[i, j] -= step
                    numeric = (float(info_nce_loss(plus, 0.3)) -
                               float(info_nce_loss(minus, 0.3))) / (2 * step)
                    a = analytic[i, j].item()
                    assert abs(a - numeric) / max(abs(a), abs(numeric), 1e-6) < 1e-4

        # both heads: cross-entropy wrt every parameter (d=6, h=4, J=3)
        torch.manual_seed(41)
        p_head = PaperInfoHead(6, 4, 3, dropout=0.3).double().eval()
        emb = torch.from_numpy(rng.normal(size=(4, 6)))
        y = torch.tensor([0, 2, 1, 1])
        finite_difference_check(p_head, lambda: F.cross_entropy(p_head.logits(emb), y))

        torch.manual_seed(43)
        ps_head = ScopeFusionHead(6, 4, 3, dropout=0.3).double().eval()
        scopes = torch.from_numpy(rng.normal(size=(3, 6)))
        finite_difference_check(
            ps_head, lambda: F.cross_entropy(ps_head.logits(emb, scopes), y))

        elapsed = time.monotonic() - started
        assert elapsed < 30.0
        report(f"PASS gradient checks: loss + both heads vs FD in {elapsed:.2f}s")


class TestForwardOracles:
    def test_criterion_forward_p_oracle(self):
        torch.manual_seed(51)
        head = PaperInfoHead(6, 4, 3, dropout=0.2).double()
        rng = np.random.default_rng(52)
        for _ in range(10):
            e = rng.normal(size=6)
            probs = forward_p(torch.from_numpy(e), head).detach().numpy()
            expected = loop_forward_p(
                e,
                head.fc1.weight.detach().numpy(), head.fc1.bias.detach().numpy(),
                head.fc2.weight.detach().numpy(), head.fc2.bias.detach().numpy(),
            )
            np.testing.assert_allclose(probs, expected, atol=1e-6)
            assert abs(probs.sum() - 1.0) <= 1e-6
        report("PASS forward oracle: paper head matches scalar loop (1e-6)")

    def test_criterion_forward_ps_oracle(self):
        torch.manual_seed(53)
        head = ScopeFusionHead(6, 4, 3, dropout=0.2).double()
        rng = np.random.default_rng(54)
        for _ in range(10):
            e = rng.normal(size=6)
            scopes = rng.normal(size=(3, 6))
            probs = forward_ps(torch.from_numpy(e), torch.from_numpy(scopes),
                               head).detach().numpy()
            expected = loop_forward_ps(
                e, scopes,
                head.paper_fc.weight.detach().numpy(),
                head.paper_fc.bias.detach().numpy(),
                head.scope_fc.weight.detach().numpy(),
                head.scope_fc.bias.detach().numpy(),
                head.fusion.weight.detach().numpy(),
                head.fusion.bias.detach().numpy(),
            )
            np.testing.assert_allclose(probs, expected, atol=1e-6)
            assert abs(probs.sum() - 1.0) <= 1e-6
        report("PASS forward oracle: fusion head matches scalar loop (1e-6)")


class TestMetricOracle:
    def test_criterion_accuracy_matches_brute_force_on_1000_matrices(self):
        rng = np.random.default_rng(61)
        for _ in range(1000):
            n = int(rng.integers(1, 13))
            j = int(rng.integers(2, 11))
            scores = rng.uniform(size=(n, j))
            labels = rng.integers(0, j, size=n).tolist()
            normalized = scores / scores.sum(axis=1, keepdims=True)
            rankings = [recommend_top_k(row, j) for row in normalized]
            K = int(rng.integers(1, j + 1))
            ours = accuracy_at_k(rankings, labels, K)
            hits = 0
            for row, label in zip(scores, labels):
                order = sorted(range(j), key=lambda i: (-row[i], i))
                hits += label in order[:K]
            assert ours == hits / n
        report("PASS metric oracle: accuracy_at_k exact on 1000 score matrices")

    def test_criterion_full_sweep_rows_nested_monotone(self, synthetic_split, pipeline):
        """All 14 combos on the synthetic corpus: every row nested-monotone."""
        config = DownstreamConfig(hidden_dim=64, epochs=3, batch_size=32,
                                  seed=17, freeze_encoder=True)
        sweep = run_sweep(pipeline.encoder, synthetic_split, COMBO_ORDER, config)
        assert not sweep.failures
        assert len(sweep.rows) == 14
        for row in sweep.rows:
            accs = [row.accuracy[k] for k in (1, 3, 5, 10)]
            assert all(a <= b for a, b in zip(accs, accs[1:])), row
        report("PASS metric report: 14-row sweep, every row acc@1<=3<=5<=10")


class TestEndToEndSmoke:
    def accuracies(self, model, split, combo_code):
        combo = FeatureCombo.parse(combo_code)
        texts = [compose_features(r, combo) for r in split.test]
        labels = [r.journal_id for r in split.test]
        probs = model.predict_proba(texts)
        k_max = min(10, len(split.journals))
        rankings = [recommend_top_k(row, k_max, journal_ids=model.journal_ids)
                    for row in probs]
        return {k: accuracy_at_k(rankings, labels, k) for k in (1, 3)}

    def test_criterion_tak_pipeline_accuracy(self, pipeline):
        acc = self.accuracies(pipeline.model_tak, pipeline.split, "TAK")
        assert acc[1] >= 0.90
        assert acc[3] >= 0.99
        report(f"PASS end-to-end TAK: Acc@1={acc[1]:.4f} (>=0.90), "
               f"Acc@3={acc[3]:.4f} (>=0.99)")

    def test_criterion_taks_fusion_path_accuracy(self, pipeline):
        acc = self.accuracies(pipeline.model_taks, pipeline.split, "TAKS")
        assert acc[1] >= 0.90
        report(f"PASS end-to-end TAKS: fusion path complete, Acc@1={acc[1]:.4f} (>=0.90)")

    def test_criterion_wall_clock_budget(self, pipeline):
        assert pipeline.elapsed_seconds < 600
        report(f"PASS end-to-end budget: pipeline took {pipeline.elapsed_seconds:.1f}s "
               "(< 600s)")


@pytest.fixture(scope="module")
def cli_env(tmp_path_factory):
    from simrec.cli import main
    root = tmp_path_factory.mktemp("determinism")
    papers, journals = write_synthetic_corpus(root / "corpus", n_journals=4,
                                              docs_per_journal=8, seed=19)
    config = root / "config.json"
    config.write_text(json.dumps({
        "seed": 23,
        "toy_layers": 1,
        "toy_model_dim": 32,
        "toy_ffn_dim": 64,
        "contrastive_epochs": 1,
        "downstream_epochs": 2,
        "hidden_dim": 32,
    }))
    return {"main": main, "root": root, "papers": str(papers),
            "journals": str(journals), "config": str(config)}


class TestDeterminism:
    """Rerunning each command under one seed reproduces outputs bit for bit."""

    def run_all_commands(self, env, tag):
        main = env["main"]
        root = env["root"]
        enc = root / f"enc_{tag}"
        model = root / f"model_{tag}"
        rep = root / f"report_{tag}.jsonl"
        base = ["--papers", env["papers"], "--journals", env["journals"],
                "--config", env["config"]]
        assert main(["finetune", *base, "--out", str(enc)]) == 0
        assert main(["train", *base, "--encoder", str(enc), "--combo", "TAK",
                     "--out", str(model)]) == 0
        assert main(["evaluate", *base, "--encoder", str(enc),
                     "--combos", "TAK,KS", "--out", str(rep)]) == 0
        return enc, model, rep

    def test_criterion_bit_identical_logs_and_reports(self, cli_env, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
        enc_a, model_a, rep_a = self.run_all_commands(cli_env, "a")
        enc_b, model_b, rep_b = self.run_all_commands(cli_env, "b")

        finetune_logs = [(enc_a / "loss_log.jsonl"), (enc_b / "loss_log.jsonl")]
        assert finetune_logs[0].read_bytes() == finetune_logs[1].read_bytes()
        train_logs = [(model_a / "loss_log.jsonl"), (model_b / "loss_log.jsonl")]
        assert train_logs[0].read_bytes() == train_logs[1].read_bytes()
        assert rep_a.read_bytes() == rep_b.read_bytes()
        assert rep_a.with_suffix(".txt").read_bytes() == \
            rep_b.with_suffix(".txt").read_bytes()
        report("PASS determinism: finetune/train loss logs and evaluate reports "
               "bit-identical across reruns")

    def test_criterion_reports_differ_only_in_timestamp_without_epoch_pin(
            self, cli_env, monkeypatch):
        monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
        *_, rep_a = self.run_all_commands(cli_env, "nc_a")
        *_, rep_b = self.run_all_commands(cli_env, "nc_b")
        rows_a = [json.loads(l) for l in rep_a.read_text().splitlines()]
        rows_b = [json.loads(l) for l in rep_b.read_text().splitlines()]
        for row in rows_a + rows_b:
            row["metadata"].pop("timestamp")
        assert rows_a == rows_b
        report("PASS determinism: unpinned reruns differ only in the timestamp field")


FULL_SCALE_VAR = "SIMREC_FULL_SCALE"


@pytest.mark.skipif(FULL_SCALE_VAR not in os.environ,
                    reason="full-scale reproduction needs the published corpus and a "
                           "pretrained checkpoint; run scripts/full_scale_reproduction.py "
                           f"or set {FULL_SCALE_VAR}=<papers.jsonl>,<journals.jsonl>")
class TestFullScaleHarness:
    """Optional, not gating: TAKS targets 0.5194/0.8112/0.8866/0.9496 +/- 0.03."""

    def test_criterion_full_scale_taks_targets(self):
        import subprocess
        import sys
        papers, journals = os.environ[FULL_SCALE_VAR].split(",")
        result = subprocess.run(
            [sys.executable, "scripts/full_scale_reproduction.py",
             "--papers", papers, "--journals", journals, "--check-targets"],
            capture_output=True, text=True, timeout=7 * 24 * 3600,
        )
        assert result.returncode == 0, result.stdout + result.stderr
        report("PASS full-scale harness: TAKS row within +/-0.03 of published values")
