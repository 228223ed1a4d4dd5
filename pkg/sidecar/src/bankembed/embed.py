"""Embedding backends: a deterministic offline hasher and a CLIP adapter.

HashEmbedder is the workhorse for tests and network-free audits: signed
feature hashing over character trigrams (text) and coarse intensity cells
(images), unit-normalized. It shares nothing with CLIP semantically, but
it is deterministic, dimension-stable, and fast, which is what format and
protocol checks need. ClipEmbedder adapts a pretrained contrastive model
behind the same interface when torch, transformers, and weights are all
reachable; otherwise it raises ModelLoadFailure instead of silently
degrading.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ModelLoadFailure

TEXT_MODEL_DEFAULT = "openai/clip-vit-large-patch14"
CLASSIFY_MODEL_DEFAULT = "openai/clip-vit-base-patch32"
HASH_MODEL_ID = "hash-v1"

_HASH_DIM = 256
_GRID = 16
_LEVELS = 32


def _hashed_vector(features, dim: int) -> np.ndarray:
    v = np.zeros(dim)
    for feat in features:
        digest = hashlib.blake2b(feat, digest_size=8, person=b"bankembed").digest()
        index = int.from_bytes(digest[:4], "little") % dim
        v[index] += 1.0 if digest[4] & 1 else -1.0
    norm = np.linalg.norm(v)
    if norm == 0.0:
        # featureless or fully cancelled input: a fixed sentinel vector
        return _hashed_vector([b"<null>"], dim)
    return (v / norm).astype("<f4")


def _image_cells(img: np.ndarray):
    """Quantized mean intensity of a GRID x GRID cell decomposition."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.mean(axis=2)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a (h, w) or (h, w, channels) image, got shape {arr.shape}")
    if arr.max() <= 1.0:
        arr = arr * 255.0
    h, w = arr.shape
    iy = np.arange(h) * _GRID // h
    ix = np.arange(w) * _GRID // w
    cell = (iy[:, None] * _GRID + ix[None, :]).ravel()
    sums = np.bincount(cell, weights=arr.ravel(), minlength=_GRID * _GRID)
    counts = np.bincount(cell, minlength=_GRID * _GRID)
    means = sums / np.maximum(counts, 1)
    quant = np.minimum((means / 256.0 * _LEVELS).astype(int), _LEVELS - 1)
    return [b"c%d:%d" % (i, q) for i, q in enumerate(quant)]


class HashEmbedder:
    """Deterministic feature-hash embedder; no model weights involved."""

    model_id = HASH_MODEL_ID
    dim = _HASH_DIM

    def embed_texts(self, texts) -> np.ndarray:
        texts = list(texts)
        out = np.empty((len(texts), self.dim), dtype="<f4")
        for i, text in enumerate(texts):
            padded = f" {text.lower()} "
            grams = [padded[j:j + 3].encode("utf-8") for j in range(max(len(padded) - 2, 1))]
            out[i] = _hashed_vector(grams, self.dim)
        return out

    def embed_images(self, images) -> np.ndarray:
        images = list(images)
        out = np.empty((len(images), self.dim), dtype="<f4")
        for i, img in enumerate(images):
            out[i] = _hashed_vector(_image_cells(img), self.dim)
        return out


class ClipEmbedder:
    """Contrastive vision-language model behind the same batch interface.

    Construction loads the model eagerly so failures surface immediately
    and carry the model id. Inference runs in eval mode under no_grad,
    making repeated calls deterministic.
    """

    def __init__(self, model_id: str):
        self.model_id = model_id
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except Exception as exc:
            raise ModelLoadFailure(model_id, f"runtime unavailable: {exc}") from exc
        try:
            self._model = CLIPModel.from_pretrained(model_id)
            self._processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadFailure(model_id, str(exc)) from exc
        self._torch = torch
        self._model.eval()
        self.dim = int(self._model.config.projection_dim)

    @staticmethod
    def _projected(features) -> "np.ndarray":
        # transformers >= 5 returns an output object; the projection lives
        # in pooler_output. Older versions return the tensor directly.
        if hasattr(features, "pooler_output"):
            features = features.pooler_output
        return features.cpu().numpy().astype("<f4")

    def embed_texts(self, texts) -> np.ndarray:
        texts = list(texts)
        if not texts:
            return np.zeros((0, self.dim), dtype="<f4")
        batch = self._processor(text=texts, return_tensors="pt", padding=True, truncation=True)
        with self._torch.no_grad():
            feats = self._model.get_text_features(**batch)
        return self._projected(feats)

    def embed_images(self, images) -> np.ndarray:
        from PIL import Image

        images = list(images)
        if not images:
            return np.zeros((0, self.dim), dtype="<f4")
        pil = [Image.fromarray(np.asarray(im, dtype=np.uint8)) for im in images]
        batch = self._processor(images=pil, return_tensors="pt")
        with self._torch.no_grad():
            feats = self._model.get_image_features(**batch)
        return self._projected(feats)


def make_embedder(model_id: str):
    if model_id == HASH_MODEL_ID or model_id.startswith("hash-"):
        return HashEmbedder()
    return ClipEmbedder(model_id)


def embed_batch(texts=(), images=(), model_id: str = TEXT_MODEL_DEFAULT, embedder=None):
    """One vector per item: (text_vectors, image_vectors), shared dim."""
    emb = embedder if embedder is not None else make_embedder(model_id)
    return emb.embed_texts(list(texts)), emb.embed_images(list(images))
