"""Description-text statistics: tokenization, vocabulary, concept density.

The tokenizer is a byte-level BPE with an end-of-word marker, reading the
published vocab.json / merges.txt format, so a real checkpoint's files drop
in via --tokenizer-dir. The bundled model is trained on generic English
text and exists to make token statistics deterministic offline.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import regex

from .errors import EmptyDataset

END_OF_WORD = "</w>"

# word splitter used by CLIP-style tokenizers: contractions, letter runs,
# single digits, punctuation runs
CLIP_SPLIT = regex.compile(
    r"""<\|startoftext\|>|<\|endoftext\|>|'s|'t|'re|'ve|'m|'ll|'d|[\p{L}]+|[\p{N}]|[^\s\p{L}\p{N}]+""",
    regex.IGNORECASE,
)

_WS = regex.compile(r"\s+")

CONCEPT_AXES = ("color", "material", "style", "shape", "component")


@lru_cache(maxsize=1)
def bytes_to_unicode() -> dict:
    """Reversible byte -> printable-unicode map used by byte-level BPE.

    Printable ASCII and two Latin-1 ranges map to themselves; the remaining
    68 byte values map to codepoints starting at 256.
    """
    bs = (list(range(ord("!"), ord("~") + 1))
          + list(range(ord("\xa1"), ord("\xac") + 1))
          + list(range(ord("\xae"), ord("\xff") + 1)))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, (chr(c) for c in cs)))


@lru_cache(maxsize=1)
def unicode_to_bytes() -> dict:
    return {v: k for k, v in bytes_to_unicode().items()}


def clean_text(text: str) -> str:
    """NFC-normalize, collapse whitespace runs to single spaces, lowercase."""
    text = unicodedata.normalize("NFC", text)
    text = _WS.sub(" ", text).strip()
    return text.lower()


class TokenizerModel:
    """Byte-level BPE with an end-of-word marker on the last byte of a word."""

    def __init__(self, vocab: dict, merges: list):
        self.vocab = dict(vocab)
        self.merges = [tuple(m) for m in merges]
        self.ranks = {m: i for i, m in enumerate(self.merges)}
        for a, b in self.merges:
            if a + b not in self.vocab:
                raise ValueError(f"merge output {a + b!r} missing from vocab")
        self._cache: dict = {}

    def _bpe(self, word: str) -> tuple:
        """Merge loop over one byte-encoded word (marker already appended)."""
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        parts = list(word[:-len(END_OF_WORD)])
        if not parts:
            result = (word,)
            self._cache[word] = result
            return result
        parts[-1] = parts[-1] + END_OF_WORD
        while len(parts) > 1:
            pairs = {(parts[i], parts[i + 1]) for i in range(len(parts) - 1)}
            best = min(pairs, key=lambda p: self.ranks.get(p, float("inf")))
            if best not in self.ranks:
                break
            merged = []
            i = 0
            while i < len(parts):
                if i < len(parts) - 1 and (parts[i], parts[i + 1]) == best:
                    merged.append(parts[i] + parts[i + 1])
                    i += 2
                else:
                    merged.append(parts[i])
                    i += 1
            parts = merged
        result = tuple(parts)
        self._cache[word] = result
        return result

    def encode_pieces(self, text: str) -> list:
        """BPE pieces (marker form) for cleaned text."""
        b2u = bytes_to_unicode()
        pieces = []
        for word in CLIP_SPLIT.findall(clean_text(text)):
            encoded = "".join(b2u[b] for b in word.encode("utf-8")) + END_OF_WORD
            pieces.extend(self._bpe(encoded))
        return pieces


def load_tokenizer(directory) -> TokenizerModel:
    """Read vocab.json and merges.txt (published checkpoint layout)."""
    directory = Path(directory)
    with open(directory / "vocab.json", encoding="utf-8") as fh:
        vocab = json.load(fh)
    merges = []
    with open(directory / "merges.txt", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            a, b = line.split(" ")
            merges.append((a, b))
    return TokenizerModel(vocab, merges)


@lru_cache(maxsize=1)
def bundled_tokenizer() -> TokenizerModel:
    from importlib import resources

    root = resources.files("bankaudit.data").joinpath("tokenizer")
    with root.joinpath("vocab.json").open(encoding="utf-8") as fh:
        vocab = json.load(fh)
    merges = []
    with root.joinpath("merges.txt").open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            a, b = line.split(" ")
            merges.append((a, b))
    return TokenizerModel(vocab, merges)


def _decode_piece(piece: str) -> str:
    u2b = unicode_to_bytes()
    if piece.endswith(END_OF_WORD):
        piece = piece[:-len(END_OF_WORD)]
    data = bytes(u2b[ch] for ch in piece if ch in u2b)
    return data.decode("utf-8", errors="replace")


def tokenize(text: str, model: TokenizerModel | None = None) -> list:
    """Human-readable BPE tokens of a description (markers stripped)."""
    if model is None:
        model = bundled_tokenizer()
    return [_decode_piece(p) for p in model.encode_pieces(text)]


# --- token filtering and keyword banks ---------------------------------------

@lru_cache(maxsize=1)
def bundled_stopwords() -> frozenset:
    from importlib import resources

    text = resources.files("bankaudit.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_stopwords(path) -> frozenset:
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip() for w in fh if w.strip())


def meaningful_tokens(tokens, stopwords=None) -> list:
    """Alphabetic tokens of length >= 3 that are not stopwords (case-insensitive)."""
    if stopwords is None:
        stopwords = bundled_stopwords()
    return [t for t in tokens
            if t.isalpha() and len(t) >= 3 and t.lower() not in stopwords]


@dataclass
class KeywordBanks:
    """Whole-word keyword lists per concept axis, matched case-insensitively."""

    banks: dict  # axis -> tuple of keywords
    _patterns: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for axis in CONCEPT_AXES:
            if axis not in self.banks:
                raise ValueError(f"keyword banks missing axis {axis!r}")
        self.banks = {axis: tuple(words) for axis, words in self.banks.items()}
        self._patterns = {
            axis: regex.compile(
                r"\b(?:" + "|".join(regex.escape(w) for w in words) + r")\b",
                regex.IGNORECASE,
            )
            for axis, words in self.banks.items()
            if words
        }

    def axis_hits(self, text: str) -> dict:
        """Number of whole-word matches per axis in raw (uncleaned) text."""
        return {
            axis: len(self._patterns[axis].findall(text)) if axis in self._patterns else 0
            for axis in self.banks
        }


def load_banks(path) -> KeywordBanks:
    with open(path, encoding="utf-8") as fh:
        return KeywordBanks(banks=json.load(fh))


@lru_cache(maxsize=1)
def bundled_banks() -> KeywordBanks:
    from importlib import resources

    text = resources.files("bankaudit.data").joinpath("keyword_banks.json").read_text("utf-8")
    return KeywordBanks(banks=json.loads(text))


def concept_density(text: str, banks: KeywordBanks | None = None) -> int:
    """Number of concept axes (0..5) with at least one whole-word keyword hit.

    Indicator semantics: repeating a keyword does not raise the score.
    """
    if banks is None:
        banks = bundled_banks()
    hits = banks.axis_hits(text)
    return sum(1 for axis in CONCEPT_AXES if hits.get(axis, 0) > 0)


@dataclass(frozen=True)
class TextStats:
    asset_id: str
    meaningful_tokens: int
    concept_density: int


@dataclass(frozen=True)
class DatasetTextStats:
    n: int
    mean_meaningful_tokens: float
    vocab_size: int  # distinct meaningful tokens across the dataset
    mean_concept_density: float


def text_stats(asset_id: str, description: str,
               model: TokenizerModel | None = None,
               stopwords=None,
               banks: KeywordBanks | None = None) -> tuple:
    """(TextStats, meaningful token list) for one description."""
    toks = meaningful_tokens(tokenize(description, model), stopwords)
    return TextStats(
        asset_id=asset_id,
        meaningful_tokens=len(toks),
        concept_density=concept_density(description, banks),
    ), toks


def dataset_text_stats(descriptions: dict,
                       model: TokenizerModel | None = None,
                       stopwords=None,
                       banks: KeywordBanks | None = None) -> DatasetTextStats:
    """Aggregate token statistics over {asset_id: description}."""
    if not descriptions:
        raise EmptyDataset("no descriptions to analyze")
    vocab = set()
    total_tokens = 0
    total_density = 0
    for asset_id in sorted(descriptions):
        stats, toks = text_stats(asset_id, descriptions[asset_id], model, stopwords, banks)
        vocab.update(toks)
        total_tokens += stats.meaningful_tokens
        total_density += stats.concept_density
    n = len(descriptions)
    return DatasetTextStats(
        n=n,
        mean_meaningful_tokens=total_tokens / n,
        vocab_size=len(vocab),
        mean_concept_density=total_density / n,
    )
