import numpy as np
import pytest

from bankembed import HashEmbedder, classify_fixed_vocab


def rng_images(n, seed=11):
    rng = np.random.default_rng(seed)
    return [rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8) for _ in range(n)]


class TestClassify:
    def test_rows_softmax_to_one(self):
        probs = classify_fixed_vocab(
            rng_images(3), ["chair", "giraffe", "rocket", "lamp", "tower"],
            embedder=HashEmbedder(),
        )
        assert probs.shape == (3, 5)
        assert (probs >= 0.0).all()
        assert np.abs(probs.sum(axis=1) - 1.0).max() <= 1e-5

    def test_singleton_vocabulary_is_certain(self):
        probs = classify_fixed_vocab(rng_images(2), ["chair"], embedder=HashEmbedder())
        assert probs.shape == (2, 1)
        assert (probs == 1.0).all()

    def test_duplicate_class_splits_evenly(self):
        probs = classify_fixed_vocab(
            rng_images(2), ["chair", "lamp", "chair"], embedder=HashEmbedder()
        )
        np.testing.assert_array_equal(probs[:, 0], probs[:, 2])
        assert np.abs(probs.sum(axis=1) - 1.0).max() <= 1e-5

    def test_deterministic(self):
        images = rng_images(2, seed=3)
        vocab = ["chair", "table"]
        a = classify_fixed_vocab(images, vocab, embedder=HashEmbedder())
        b = classify_fixed_vocab(images, vocab, embedder=HashEmbedder())
        np.testing.assert_array_equal(a, b)

    def test_prompt_template_changes_scores(self):
        images = rng_images(1, seed=5)
        vocab = ["chair", "giraffe"]
        plain = classify_fixed_vocab(images, vocab, embedder=HashEmbedder())
        photo = classify_fixed_vocab(images, vocab, embedder=HashEmbedder(),
                                     prompt="a photo of a {}")
        assert not np.allclose(plain, photo)

    def test_empty_vocabulary_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            classify_fixed_vocab(rng_images(1), [], embedder=HashEmbedder())

    def test_no_images_gives_empty_matrix(self):
        probs = classify_fixed_vocab([], ["chair"], embedder=HashEmbedder())
        assert probs.shape == (0, 1)
