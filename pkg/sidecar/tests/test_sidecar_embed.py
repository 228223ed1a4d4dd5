import numpy as np
import pytest

from bankembed import ClipEmbedder, HashEmbedder, embed_batch, make_embedder
from bankembed.errors import ModelLoadFailure

try:
    import torch  # noqa: F401
    import transformers  # noqa: F401
    _CLIP_RUNTIME = True
except Exception:
    _CLIP_RUNTIME = False

needs_clip_runtime = pytest.mark.skipif(not _CLIP_RUNTIME, reason="torch/transformers unavailable")


def rng_image(seed, h=48, w=64):
    return np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint16).astype(np.uint8)


class TestHashTexts:
    def test_same_text_same_vector(self):
        emb = HashEmbedder()
        a = emb.embed_texts(["a worn leather armchair", "a worn leather armchair"])
        assert np.array_equal(a[0], a[1])
        again = emb.embed_texts(["a worn leather armchair"])
        assert np.array_equal(a[0], again[0])

    def test_distinct_texts_distinct_vectors(self):
        emb = HashEmbedder()
        vecs = emb.embed_texts(["a red chair", "a blue whale"])
        assert not np.array_equal(vecs[0], vecs[1])

    def test_unit_norm(self):
        vecs = HashEmbedder().embed_texts(["chair", "a much longer description of a chair"])
        norms = np.linalg.norm(vecs.astype(np.float64), axis=1)
        assert np.allclose(norms, 1.0, atol=1e-6)

    def test_empty_text_allowed_and_deterministic(self):
        emb = HashEmbedder()
        a = emb.embed_texts([""])
        b = emb.embed_texts([""])
        assert np.array_equal(a, b)
        assert abs(np.linalg.norm(a[0].astype(np.float64)) - 1.0) < 1e-6

    def test_shared_words_raise_cosine(self):
        emb = HashEmbedder()
        v = emb.embed_texts(["red wooden chair", "red wooden table", "qxzv jklm wfbp"]).astype(np.float64)
        near = float(v[0] @ v[1])
        far = float(v[0] @ v[2])
        assert near > far

    def test_shapes_and_dtype(self):
        emb = HashEmbedder()
        vecs = emb.embed_texts(["a", "b", "c"])
        assert vecs.shape == (3, emb.dim)
        assert vecs.dtype == np.dtype("<f4")
        assert emb.embed_texts([]).shape == (0, emb.dim)


class TestHashImages:
    def test_self_cosine_is_one(self):
        img = rng_image(7)
        v = HashEmbedder().embed_images([img])[0].astype(np.float64)
        assert abs(v @ v - 1.0) <= 1e-6

    def test_same_image_same_vector(self):
        emb = HashEmbedder()
        img = rng_image(3)
        a = emb.embed_images([img, img.copy()])
        assert np.array_equal(a[0], a[1])

    def test_distinct_images_distinct_vectors(self):
        emb = HashEmbedder()
        vecs = emb.embed_images([rng_image(1), rng_image(2)])
        assert not np.array_equal(vecs[0], vecs[1])

    def test_grayscale_and_float_inputs(self):
        emb = HashEmbedder()
        gray = rng_image(5)[:, :, 0]
        scaled = gray.astype(np.float64) / 255.0
        a = emb.embed_images([gray])
        assert a.shape == (1, emb.dim)
        b = emb.embed_images([scaled])
        assert np.isfinite(b).all()

    def test_batch_of_n(self):
        emb = HashEmbedder()
        vecs = emb.embed_images([rng_image(i) for i in range(5)])
        assert vecs.shape == (5, emb.dim)
        assert emb.embed_images([]).shape == (0, emb.dim)


class TestFactory:
    def test_hash_id(self):
        assert isinstance(make_embedder("hash-v1"), HashEmbedder)

    def test_embed_batch_shared_dim(self):
        texts, images = embed_batch(
            texts=["a chair"], images=[rng_image(0)], model_id="hash-v1"
        )
        assert texts.shape == (1, 256)
        assert images.shape == (1, 256)

    def test_clip_weights_unreachable(self):
        with pytest.raises(ModelLoadFailure) as err:
            make_embedder("/definitely/not/a/model/dir")
        assert err.value.model_id == "/definitely/not/a/model/dir"


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory):
    """A tiny randomly initialized CLIP saved locally (no network, no
    pretrained weights). Only reached from tests behind needs_clip_runtime."""
    import torch
    from transformers import (
        CLIPConfig,
        CLIPImageProcessor,
        CLIPModel,
        CLIPProcessor,
        CLIPTokenizer,
    )

    def bytes_to_unicode():
        bs = (list(range(ord("!"), ord("~") + 1))
              + list(range(ord("\xa1"), ord("\xac") + 1))
              + list(range(ord("\xae"), ord("\xff") + 1)))
        cs = bs[:]
        n = 0
        for b in range(2 ** 8):
            if b not in bs:
                bs.append(b)
                cs.append(2 ** 8 + n)
                n += 1
        return dict(zip(bs, [chr(c) for c in cs]))

    alphabet = list(bytes_to_unicode().values())
    vocab = {}
    for ch in alphabet:
        vocab[ch] = len(vocab)
    for ch in alphabet:
        vocab[ch + "</w>"] = len(vocab)
    vocab["<|startoftext|>"] = len(vocab)
    vocab["<|endoftext|>"] = len(vocab)

    config = CLIPConfig(
        text_config={
            "vocab_size": len(vocab), "hidden_size": 32, "intermediate_size": 37,
            "num_hidden_layers": 2, "num_attention_heads": 4,
            "max_position_embeddings": 77,
            "bos_token_id": vocab["<|startoftext|>"],
            "eos_token_id": vocab["<|endoftext|>"],
        },
        vision_config={
            "hidden_size": 32, "intermediate_size": 37, "num_hidden_layers": 2,
            "num_attention_heads": 4, "image_size": 32, "patch_size": 16,
        },
        projection_dim=16,
    )
    torch.manual_seed(0)
    path = tmp_path_factory.mktemp("tiny-clip")
    CLIPModel(config).save_pretrained(path)
    tokenizer = CLIPTokenizer(vocab=vocab, merges=[])
    image_processor = CLIPImageProcessor(
        size={"shortest_edge": 32}, crop_size={"height": 32, "width": 32}
    )
    CLIPProcessor(image_processor=image_processor, tokenizer=tokenizer).save_pretrained(path)
    return str(path)


@needs_clip_runtime
class TestClipTiny:
    """The CLIP adapter, exercised against the tiny local model."""

    def test_loads_and_reports_dim(self, model_dir):
        emb = ClipEmbedder(model_dir)
        assert emb.dim == 16
        assert isinstance(make_embedder(model_dir), ClipEmbedder)

    def test_text_batch_deterministic(self, model_dir):
        emb = ClipEmbedder(model_dir)
        a = emb.embed_texts(["a red chair", "a giraffe"])
        b = emb.embed_texts(["a red chair", "a giraffe"])
        assert a.shape == (2, 16)
        assert a.dtype == np.dtype("<f4")
        assert np.array_equal(a, b)
        assert np.isfinite(a).all()

    def test_image_batch_deterministic(self, model_dir):
        emb = ClipEmbedder(model_dir)
        imgs = [rng_image(1), rng_image(2), rng_image(3)]
        a = emb.embed_images(imgs)
        b = emb.embed_images(imgs)
        assert a.shape == (3, 16)
        assert np.array_equal(a, b)

    def test_empty_batches(self, model_dir):
        emb = ClipEmbedder(model_dir)
        assert emb.embed_texts([]).shape == (0, 16)
        assert emb.embed_images([]).shape == (0, 16)
