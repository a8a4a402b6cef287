import math

import numpy as np
import pytest

from textruct.embedding import (
    EmbeddingModel,
    TrainConfig,
    context_probability,
    export_text,
    full_loss,
    load_model,
    loss_and_gradient,
    nearest_neighbors,
    save_model,
    softmax_distribution,
    train_skip_gram,
)

from conftest import make_micro_streams


def zero_model(vocab_size=4, dim=3):
    vocab = [f"w{i}" for i in range(vocab_size)]
    return EmbeddingModel(
        vocab=vocab,
        input_matrix=np.zeros((vocab_size, dim)),
        output_matrix=np.zeros((dim, vocab_size)),
        dim=dim,
    )


def random_model(rng, vocab_size, dim):
    vocab = [f"w{i}" for i in range(vocab_size)]
    return EmbeddingModel(
        vocab=vocab,
        input_matrix=rng.normal(size=(vocab_size, dim)),
        output_matrix=rng.normal(size=(dim, vocab_size)),
        dim=dim,
    )


class TestContextProbability:
    def test_zero_model_is_uniform(self):
        model = zero_model(4)
        for center in model.vocab:
            for context in model.vocab:
                assert context_probability(model, center, context) == pytest.approx(0.25)

    def test_two_word_logistic_value(self):
        model = EmbeddingModel(
            vocab=["o", "x"],
            input_matrix=np.array([[1.0], [0.0]]),
            output_matrix=np.array([[1.0, 0.0]]),
            dim=1,
        )
        expected = math.e / (math.e + 1.0)
        assert context_probability(model, "o", "o") == pytest.approx(expected, abs=1e-9)
        assert context_probability(model, "o", "x") == pytest.approx(1 - expected, abs=1e-9)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            model = random_model(rng, int(rng.integers(2, 60)), int(rng.integers(1, 12)))
            total = sum(context_probability(model, model.vocab[0], w) for w in model.vocab)
            assert abs(total - 1.0) < 1e-9

    def test_unknown_token_named_in_error(self):
        with pytest.raises(KeyError, match="zebra"):
            context_probability(zero_model(), "zebra", "w0")


class TestLossAndGradient:
    def test_zero_model_loss_is_log_vocab(self):
        model = zero_model(4)
        loss, _, _ = loss_and_gradient(model, [("w0", "w1"), ("w2", "w3")])
        assert loss == pytest.approx(math.log(4), abs=1e-12)

    def test_empty_pairs_rejected(self):
        with pytest.raises(ValueError):
            loss_and_gradient(zero_model(), [])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        model = random_model(rng, 12, 5)
        model.input_matrix *= 0.3
        model.output_matrix *= 0.3
        pairs = [(model.vocab[int(rng.integers(12))], model.vocab[int(rng.integers(12))])
                 for _ in range(8)]
        _, gW, gWp = loss_and_gradient(model, pairs)
        h = 1e-6
        for mat, grad in ((model.input_matrix, gW), (model.output_matrix, gWp)):
            flat, gflat = mat.ravel(), grad.ravel()
            for idx in range(0, flat.size, 7):
                orig = flat[idx]
                flat[idx] = orig + h
                up = full_loss(model, pairs)
                flat[idx] = orig - h
                down = full_loss(model, pairs)
                flat[idx] = orig
                numeric = (up - down) / (2 * h)
                assert abs(numeric - gflat[idx]) <= 1e-5 * max(1.0, abs(numeric))

    def test_loss_decreases_after_small_step(self):
        rng = np.random.default_rng(5)
        model = random_model(rng, 20, 6)
        pairs = [("w0", "w1"), ("w3", "w2"), ("w5", "w0")]
        before, gW, gWp = loss_and_gradient(model, pairs)
        model.input_matrix -= 1e-3 * gW
        model.output_matrix -= 1e-3 * gWp
        after = full_loss(model, pairs)
        assert after < before


class TestTraining:
    def test_deterministic_given_seed(self):
        streams = make_micro_streams(120)
        cfg = TrainConfig(window=2, dim=8, epochs=2, learning_rate=0.01,
                          seed=9, min_count=1, batch_size=64)
        m1 = train_skip_gram(streams, cfg)
        m2 = train_skip_gram(streams, cfg)
        assert m1.vocab == m2.vocab
        assert np.array_equal(m1.input_matrix, m2.input_matrix)
        assert np.array_equal(m1.output_matrix, m2.output_matrix)

    def test_epoch_loss_non_increasing_small_lr(self):
        streams = make_micro_streams(150)
        losses = []
        cfg = TrainConfig(window=2, dim=8, epochs=10, learning_rate=0.002,
                          seed=3, min_count=1, batch_size=128)
        train_skip_gram(streams, cfg, on_epoch=lambda e, l: losses.append(l))
        assert len(losses) == 10
        for a, b in zip(losses, losses[1:]):
            assert b <= a + 1e-9

    def test_planted_pair_mutual_top5(self):
        streams = make_micro_streams(400)
        cfg = TrainConfig(window=2, dim=12, epochs=25, learning_rate=0.02,
                          seed=1, min_count=2, batch_size=128)
        model = train_skip_gram(streams, cfg)
        top_alpha = [t for t, _ in nearest_neighbors(model, "alpha", 5)]
        top_beta = [t for t, _ in nearest_neighbors(model, "beta", 5)]
        assert "beta" in top_alpha
        assert "alpha" in top_beta

    def test_min_count_filters_vocab(self):
        streams = [["often", "often", "often", "rareword"]]
        model = train_skip_gram(streams, TrainConfig(window=2, dim=4, epochs=1,
                                                     min_count=2, seed=0))
        assert "rareword" not in model.vocab

    def test_empty_vocab_rejected(self):
        with pytest.raises(ValueError, match="vocabulary"):
            train_skip_gram([["solo"]], TrainConfig(window=2, dim=4, epochs=1,
                                                    min_count=5, seed=0))

    def test_negative_sampling_mode_runs_deterministically(self):
        streams = make_micro_streams(200)
        cfg = TrainConfig(window=2, dim=8, epochs=3, learning_rate=0.02,
                          mode="negative_sampling", negative_k=4, seed=8,
                          min_count=1, batch_size=64)
        m1 = train_skip_gram(streams, cfg)
        m2 = train_skip_gram(streams, cfg)
        assert np.array_equal(m1.input_matrix, m2.input_matrix)
        assert np.all(np.isfinite(m1.input_matrix))


class TestNearestNeighbors:
    def test_identical_rows_similarity_one(self):
        model = EmbeddingModel(
            vocab=["a", "b", "c"],
            input_matrix=np.array([[1.0, 2.0], [1.0, 2.0], [-2.0, 1.0]]),
            output_matrix=np.zeros((2, 3)),
            dim=2,
        )
        got = nearest_neighbors(model, "a", 2)
        assert got[0] == ("b", pytest.approx(1.0))
        assert got[1][1] == pytest.approx(0.0, abs=1e-12)

    def test_oov_empty_with_warning(self, caplog):
        import logging

        with caplog.at_level(logging.WARNING, logger="textruct.embedding"):
            assert nearest_neighbors(zero_model(), "absent", 3) == []
        assert any("absent" in r.message for r in caplog.records)

    def test_ties_break_lexicographically(self):
        model = zero_model(4)
        got = nearest_neighbors(model, "w2", 3)
        assert [t for t, _ in got] == ["w0", "w1", "w3"]

    def test_ranking_invariant_under_global_scaling(self):
        rng = np.random.default_rng(2)
        model = random_model(rng, 15, 6)
        base = nearest_neighbors(model, "w3", 10)
        model.input_matrix *= 7.5
        scaled = nearest_neighbors(model, "w3", 10)
        assert [t for t, _ in base] == [t for t, _ in scaled]
        for (_, s1), (_, s2) in zip(base, scaled):
            assert s1 == pytest.approx(s2, abs=1e-9)


class TestPersistence:
    def test_roundtrip(self, tmp_path):
        streams = make_micro_streams(80)
        cfg = TrainConfig(window=2, dim=6, epochs=1, seed=4, min_count=1)
        model = train_skip_gram(streams, cfg)
        path = tmp_path / "m.bin"
        save_model(model, path)
        back = load_model(path)
        assert back.vocab == model.vocab
        assert back.dim == model.dim
        assert back.mode == model.mode
        assert back.seed == model.seed
        np.testing.assert_allclose(back.input_matrix, model.input_matrix, atol=1e-6)
        np.testing.assert_allclose(back.output_matrix, model.output_matrix, atol=1e-6)

    def test_save_is_byte_deterministic(self, tmp_path):
        streams = make_micro_streams(80)
        cfg = TrainConfig(window=2, dim=6, epochs=1, seed=4, min_count=1)
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        save_model(train_skip_gram(streams, cfg), p1)
        save_model(train_skip_gram(streams, cfg), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_text_export(self, tmp_path):
        model = zero_model(3, 2)
        path = tmp_path / "m.txt"
        export_text(model, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "3 2"
        assert lines[1].split()[0] == "w0"
        assert len(lines) == 4

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ValueError, match="embedding model"):
            load_model(path)


def test_softmax_distribution_matches_pointwise():
    rng = np.random.default_rng(6)
    model = random_model(rng, 9, 4)
    dist = softmax_distribution(model, "w1")
    for j, w in enumerate(model.vocab):
        assert dist[j] == pytest.approx(context_probability(model, "w1", w), abs=1e-12)
