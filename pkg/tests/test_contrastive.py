"""Cosine similarity, the contrastive loss (vs. pure-Python oracles), and
the fine-tuning loop."""

import math

import numpy as np
import pytest
import torch
import torch.nn as nn

from simrec.contrastive import (
    ContrastiveConfig,
    cosine_similarity,
    finetune,
    info_nce_loss,
    similarity_matrix,
)
from simrec.encoders import TokenizedBatch, ToyConfig, ToyTransformerEncoder
from simrec.errors import (
    DegenerateBatch,
    DimensionMismatch,
    NonFiniteLoss,
    ZeroNormVector,
)
from simrec.synthetic import make_synthetic_corpus
from simrec.corpus import CorpusSplit, build_pair_dataset


def loop_cosine(a, b):
    """Scalar-loop cosine, independent of the library path."""
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    return dot / (na * nb)


def loop_loss(S, tau):
    """Unvectorized double-loop evaluation, no stability trick."""
    n = len(S)
    total = 0.0
    for i in range(n):
        denom = 0.0
        for j in range(n):
            denom += math.exp(S[i][j] / tau)
        total += -math.log(math.exp(S[i][i] / tau) / denom)
    return total / n


class TestCosineSimilarity:
    def test_orthogonal(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0

    def test_collinear(self):
        assert cosine_similarity([1, 2], [2, 4]) == pytest.approx(1.0, abs=1e-12)

    def test_forty_five_degrees(self):
        assert cosine_similarity([1, 1], [1, 0]) == pytest.approx(0.7071, abs=1e-4)

    def test_zero_norm_rejected(self):
        with pytest.raises(ZeroNormVector):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(ZeroNormVector):
            cosine_similarity([1.0, 0.0], [1e-13, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine_similarity([1, 0], [1, 0, 0])

    def test_clamped_to_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rng.normal(size=8)
            assert -1.0 <= cosine_similarity(a, 3.7 * a) <= 1.0


class TestSimilarityMatrix:
    def test_orthonormal_rows_give_identity(self):
        eye = torch.eye(4, dtype=torch.float64)
        sims = similarity_matrix(eye, eye)
        assert torch.equal(sims, torch.eye(4, dtype=torch.float64))

    def test_identical_rows_give_ones(self):
        h = torch.ones((3, 5), dtype=torch.float64)
        sims = similarity_matrix(h, h)
        assert torch.allclose(sims, torch.ones(3, 3, dtype=torch.float64))

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(42)
        h = rng.normal(size=(4, 8))
        hp = rng.normal(size=(4, 8))
        sims = similarity_matrix(torch.from_numpy(h), torch.from_numpy(hp))
        for i in range(4):
            for j in range(4):
                assert sims[i, j].item() == pytest.approx(
                    loop_cosine(h[i], hp[j]), abs=1e-12
                )

    def test_zero_norm_row_reports_index(self):
        h = torch.ones((3, 4), dtype=torch.float64)
        bad = h.clone()
        bad[2] = 0.0
        with pytest.raises(ZeroNormVector) as err:
            similarity_matrix(h, bad)
        assert err.value.index == 2

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            similarity_matrix(torch.ones(3, 4), torch.ones(4, 4))


class TestInfoNceLoss:
    def test_uniform_similarities_give_log_n(self):
        for n in (2, 3, 5, 8):
            S = torch.full((n, n), 0.37, dtype=torch.float64)
            assert float(info_nce_loss(S, 0.5)) == pytest.approx(math.log(n), abs=1e-6)

    def test_single_pair_is_zero(self):
        for value in (-3.0, 0.0, 0.9):
            S = torch.tensor([[value]], dtype=torch.float64)
            assert float(info_nce_loss(S, 0.05)) == 0.0

    def test_hand_evaluated_two_by_two(self):
        S = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
        expected = math.log(1 + math.exp(-1))
        assert float(info_nce_loss(S, 1.0)) == pytest.approx(expected, abs=1e-6)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = int(rng.integers(1, 9))
            tau = float(rng.uniform(0.05, 2.0))
            S = rng.uniform(-1, 1, size=(n, n))
            ours = float(info_nce_loss(torch.from_numpy(S), tau))
            assert ours == pytest.approx(loop_loss(S.tolist(), tau), abs=1e-6)

    def test_non_negative(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            S = rng.uniform(-1, 1, size=(n, n))
            assert float(info_nce_loss(torch.from_numpy(S), 0.1)) >= 0.0

    def test_increasing_diagonal_strictly_decreases_loss(self):
        rng = np.random.default_rng(11)
        S = torch.from_numpy(rng.uniform(-1, 1, size=(4, 4)))
        bumped = S.clone()
        bumped[2, 2] += 0.05
        assert float(info_nce_loss(bumped, 0.2)) < float(info_nce_loss(S, 0.2))

    def test_joint_permutation_invariance(self):
        rng = np.random.default_rng(19)
        h = torch.from_numpy(rng.normal(size=(6, 12)))
        hp = torch.from_numpy(rng.normal(size=(6, 12)))
        perm = torch.tensor([3, 0, 5, 1, 4, 2])
        base = float(info_nce_loss(similarity_matrix(h, hp), 0.1))
        permuted = float(info_nce_loss(similarity_matrix(h[perm], hp[perm]), 0.1))
        assert permuted == pytest.approx(base, abs=1e-12)

    def test_cosine_scale_invariance(self):
        rng = np.random.default_rng(23)
        h = torch.from_numpy(rng.normal(size=(5, 9)))
        hp = torch.from_numpy(rng.normal(size=(5, 9)))
        base = float(info_nce_loss(similarity_matrix(h, hp), 0.07))
        scaled = float(info_nce_loss(similarity_matrix(2.5e3 * h, 1.7e-2 * hp), 0.07))
        assert scaled == pytest.approx(base, abs=1e-9)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(29)
        step = 1e-5
        for _ in range(5):
            S = torch.from_numpy(rng.uniform(-0.9, 0.9, size=(4, 4)))
            S.requires_grad_(True)
            loss = info_nce_loss(S, 0.3)
            (analytic,) = torch.autograd.grad(loss, S)
            for i in range(4):
                for j in range(4):
                    plus = S.detach().clone()
                    plus[i, j] += step
                    minus = S.detach().clone()
                    minus[i, j] -= step
                    numeric = (
                        float(info_nce_loss(plus, 0.3)) - float(info_nce_loss(minus, 0.3))
                    ) / (2 * step)
                    a = analytic[i, j].item()
                    rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
                    assert rel < 1e-4

    def test_exclude_positive_variant(self):
        S = torch.tensor([[0.9, 0.1], [0.2, 0.8]], dtype=torch.float64)
        tau = 0.5
        # oracle: denominator without the diagonal term
        expected = 0.0
        for i in range(2):
            denom = sum(math.exp(S[i, j].item() / tau) for j in range(2) if j != i)
            expected += -math.log(math.exp(S[i, i].item() / tau) / denom)
        expected /= 2
        assert float(info_nce_loss(S, tau, include_positive=False)) == pytest.approx(
            expected, abs=1e-9
        )

    def test_exclude_positive_single_pair_defined_zero(self):
        S = torch.tensor([[0.4]], dtype=torch.float64)
        assert float(info_nce_loss(S, 0.1, include_positive=False)) == 0.0

    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatch):
            info_nce_loss(torch.ones(2, 3), 0.1)

    def test_rejects_bad_temperature(self):
        with pytest.raises(ValueError):
            info_nce_loss(torch.ones(2, 2), 0.0)


def small_pairs(n_journals=4, docs=16):
    papers, journals = make_synthetic_corpus(n_journals=n_journals,
                                             docs_per_journal=docs, seed=3)
    split = CorpusSplit(train=papers, test=[], journals=journals)
    return build_pair_dataset(split)


def small_encoder(pairs, seed=21):
    texts = [t for pair in pairs.pairs for t in pair]
    config = ToyConfig(layers=1, heads=2, model_dim=32, ffn_dim=64,
                       vocab_size=512, max_len=64)
    return ToyTransformerEncoder.from_texts(texts, config, seed=seed)


class TestFinetune:
    def test_loss_decreases_across_epochs(self):
        pairs = small_pairs()
        assert len(pairs) == 64
        encoder = small_encoder(pairs)
        config = ContrastiveConfig(seed=5, epochs=3, batch_size=16)
        _, log = finetune(encoder, pairs, config)
        first = np.mean([e.loss for e in log if e.epoch == 0])
        last = np.mean([e.loss for e in log if e.epoch == config.epochs - 1])
        assert last < first

    def test_seeded_rerun_bit_identical(self):
        pairs = small_pairs()
        config = ContrastiveConfig(seed=5, epochs=2, batch_size=16)
        _, log_a = finetune(small_encoder(pairs), pairs, config)
        _, log_b = finetune(small_encoder(pairs), pairs, config)
        assert [(e.step, e.epoch, e.loss, e.lr) for e in log_a] == \
               [(e.step, e.epoch, e.loss, e.lr) for e in log_b]

    def test_batch_size_one_degenerate(self):
        pairs = small_pairs(n_journals=2, docs=2)
        encoder = small_encoder(pairs)
        before = {k: v.clone() for k, v in encoder.state_dict().items()}
        config = ContrastiveConfig(seed=5, epochs=1, batch_size=1, weight_decay=0.0)
        with pytest.warns(DegenerateBatch):
            _, log = finetune(encoder, pairs, config)
        assert all(e.loss == 0.0 for e in log)
        # zero grads and zero decay: weights must not move at all
        after = encoder.state_dict()
        assert all(torch.equal(before[k], after[k]) for k in before)

    def test_batch_size_one_with_decay_drifts_only(self):
        pairs = small_pairs(n_journals=2, docs=2)
        encoder = small_encoder(pairs)
        config = ContrastiveConfig(seed=5, epochs=1, batch_size=1, weight_decay=0.01)
        with pytest.warns(DegenerateBatch):
            _, log = finetune(encoder, pairs, config)
        assert all(e.loss == 0.0 for e in log)

    def test_loss_log_file_written(self, tmp_path):
        pairs = small_pairs(n_journals=2, docs=4)
        encoder = small_encoder(pairs)
        log_path = tmp_path / "loss.jsonl"
        _, log = finetune(encoder, pairs,
                          ContrastiveConfig(seed=5, epochs=1, batch_size=4),
                          log_path=log_path)
        lines = log_path.read_text().strip().splitlines()
        assert len(lines) == len(log)
        import json
        first = json.loads(lines[0])
        assert set(first) == {"step", "epoch", "loss", "lr"}

    def test_empty_pairs_rejected(self):
        encoder = small_encoder(small_pairs(n_journals=2, docs=2))
        with pytest.raises(ValueError):
            finetune(encoder, [], ContrastiveConfig())

    def test_non_finite_loss_aborts_with_step(self):
        class BrokenEncoder(nn.Module):
            """Duck-typed encoder whose embeddings immediately go NaN."""

            def __init__(self):
                super().__init__()
                self.scale = nn.Parameter(torch.tensor(float("nan")))

            def tokenize(self, texts, max_len=None):
                n = len(texts)
                return TokenizedBatch(
                    token_ids=torch.ones((n, 2), dtype=torch.long),
                    attention_mask=torch.ones((n, 2), dtype=torch.long),
                )

            def encode(self, batch):
                n = len(batch)
                base = torch.ones((n, 4)) + torch.arange(n).unsqueeze(1)
                return base * (1.0 + self.scale * 0.0) + self.scale * 0.0

        pairs = [("alpha", "beta"), ("gamma", "delta")]
        with pytest.raises(NonFiniteLoss) as err:
            finetune(BrokenEncoder(), pairs, ContrastiveConfig(seed=1, epochs=1))
        assert err.value.step == 0


class TestProvenance:
    def test_config_recorded_on_encoder(self):
        pairs = small_pairs(n_journals=2, docs=2)
        encoder = small_encoder(pairs)
        config = ContrastiveConfig(seed=5, epochs=1, batch_size=4)
        encoder, _ = finetune(encoder, pairs, config)
        assert encoder.provenance["contrastive"]["tau"] == config.tau
        assert encoder.provenance["contrastive"]["seed"] == 5
