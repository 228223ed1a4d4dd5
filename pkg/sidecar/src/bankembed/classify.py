"""Zero-shot probe: softmax of image-text similarities over a fixed vocabulary."""

from __future__ import annotations

import numpy as np

from .embed import CLASSIFY_MODEL_DEFAULT, make_embedder

LOGIT_SCALE = 100.0  # CLIP's learned temperature, frozen at its canonical value


def classify_fixed_vocab(images, vocabulary, model_id: str = CLASSIFY_MODEL_DEFAULT,
                         embedder=None, prompt: str = "{}") -> np.ndarray:
    """Probability of each vocabulary entry for each image.

    Returns an (n_images, n_vocab) float64 array whose rows softmax to 1.
    Duplicate vocabulary entries get identical (and jointly diluted)
    probabilities, exactly what a softmax over the full list implies.
    """
    vocab = list(vocabulary)
    if not vocab:
        raise ValueError("vocabulary is empty")
    emb = embedder if embedder is not None else make_embedder(model_id)
    tv = np.asarray(emb.embed_texts([prompt.format(c) for c in vocab]), dtype=np.float64)
    iv = np.asarray(emb.embed_images(list(images)), dtype=np.float64)
    tv /= np.maximum(np.linalg.norm(tv, axis=1, keepdims=True), 1e-12)
    iv /= np.maximum(np.linalg.norm(iv, axis=1, keepdims=True), 1e-12)

    logits = LOGIT_SCALE * (iv @ tv.T)
    logits -= logits.max(axis=1, keepdims=True)
    expd = np.exp(logits)
    return expd / expd.sum(axis=1, keepdims=True)
