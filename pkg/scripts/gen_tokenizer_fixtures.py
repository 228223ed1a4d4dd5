#!/usr/bin/env python3
"""Freeze reference-tokenizer outputs for the bundled vocab/merges.

Runs the published tokenizer implementation (transformers' fast CLIP
tokenizer) over a fixed 200-string corpus using the bundled tokenizer
assets, decodes the ids back to marker-stripped token strings, and writes
tests/fixtures/tokenizer_corpus.json. The test suite then holds
bankaudit.tokenize to byte-for-byte agreement with this frozen oracle.

Literal special-token strings ("<|startoftext|>") are excluded from the
corpus: the reference implementation short-circuits them before byte-level
encoding while this package treats them as ordinary text, a documented
non-goal for description auditing.
"""

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from bankaudit.text_metrics import END_OF_WORD, unicode_to_bytes

TOKENIZER_DIR = REPO / "src" / "bankaudit" / "data" / "tokenizer"
OUT_PATH = REPO / "tests" / "fixtures" / "tokenizer_corpus.json"

BASE_STRINGS = [
    "",
    " ",
    "chair",
    "a wooden chair",
    "armchair",
    "Armchair",
    "ARMCHAIR",
    "the red velvet armchair with ornate carvings",
    "modern minimalist desk lamp",
    "a   chair    with   extra   spaces",
    "\tchair\nwith\ttabs and newlines\n",
    "it's the designer's choice",
    "they'll say it wasn't planned, we're sure",
    "I'd've guessed he'd agree",
    "don't can't won't shouldn't",
    "12 chairs and 345 tables",
    "3.5 meters tall, 2,000 millimeters wide",
    "100% cotton! 50% off?",
    "semi-transparent glass-topped table",
    "state-of-the-art mid-century sofa",
    "hello, world.",
    "hello,world.no spaces",
    "...ellipsis... and -- dashes --",
    "(parenthetical) [bracketed] {braced}",
    "quotes 'single' and \"double\" here",
    "slash/backslash\\pipe|tilde~",
    "email-like user@example.com string",
    "path-like /usr/local/share/models",
    "snake_case and camelCase and kebab-case",
    "UPPER lower MiXeD cAsE",
    "café décor with crème accents",
    "über-gemütlich möbel",
    "naïve façade résumé",
    "niño piñata jalapeño",
    "стул и стол",
    "椅子和桌子",
    "チェアとテーブル",
    "한국어 의자",
    "καρέκλα και τραπέζι",
    "emoji test \U0001f6cb️ sofa \U0001f4a1 lamp",
    "combining é accent vs precomposed é",
    "zero-width​space inside",
    "non-breaking space here",
    "supercalifragilisticexpialidocious",
    "pneumonoultramicroscopicsilicovolcanoconiosis",
    "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa",
    "xyzzy qwerty zxcvbnm",
    "singleletters a b c d e f g",
    "a1b2c3 mixed alphanumeric",
    "#hashtag @mention $dollar €euro",
    "math: 2+2=4, 10/5=2, 3*3=9",
    "a chair. a table. a lamp. a sofa.",
    "THE QUICK BROWN FOX JUMPS OVER THE LAZY DOG",
    "the quick brown fox jumps over the lazy dog",
]

DESCRIPTIONS = [
    "antique walnut bookshelf with five shelves and carved trim",
    "scarlet ceramic vase with a gradient glaze finish",
    "translucent acrylic coffee table with chrome legs",
    "weathered oak bench with wrought iron armrests",
    "plush velvet ottoman in deep emerald green",
    "industrial pipe shelving unit with reclaimed wood planks",
    "mid-century modern teak sideboard with sliding doors",
    "hand-woven rattan pendant lampshade",
    "brushed steel floor lamp with an adjustable arm",
    "marble-topped kitchen island with a waterfall edge",
    "tufted leather chesterfield sofa in oxblood red",
    "minimalist birch plywood desk with cable management",
    "ornate gilded mirror with baroque flourishes",
    "matte black metal bed frame with a slatted base",
    "glossy white lacquered nightstand with a single drawer",
    "rustic farmhouse dining table for eight people",
    "ergonomic mesh office chair with lumbar support",
    "folding bamboo room divider with four panels",
    "cast iron radiator painted in pastel blue",
    "geometric concrete planter with a drainage hole",
    "vintage rotary telephone in cherry red bakelite",
    "portable bluetooth speaker with a fabric grille",
    "stainless steel refrigerator with a french door design",
    "compact washing machine with a chrome porthole",
    "retro microwave oven in mint green enamel",
    "mechanical keyboard with translucent keycaps",
    "curved ultrawide monitor on an aluminum stand",
    "gaming laptop with an rgb backlit keyboard",
    "porcelain dinner set with cobalt blue patterns",
    "hammered copper mixing bowl with a brass handle",
    "crystal wine decanter with an etched stopper",
    "japanese cast iron teapot with a woven handle",
    "terracotta tagine with a conical lid",
    "double-decker city bus in london red",
    "vintage pickup truck with a wooden cargo bed",
    "electric scooter with a foldable aluminum frame",
    "mountain bike with full suspension and knobby tires",
    "wooden sailboat model with canvas sails",
    "golden retriever puppy sitting on grass",
    "siamese cat with striking blue eyes",
    "flamingo standing on one leg in shallow water",
    "monarch butterfly perched on a milkweed flower",
    "bonsai juniper tree in a shallow ceramic pot",
    "towering saguaro cactus with two arms",
    "weeping willow tree beside a quiet pond",
    "cluster of white birch trees in autumn",
    "victorian greenhouse with whitewashed iron ribs",
    "brutalist concrete apartment block with balconies",
    "timber-framed barn with a gambrel roof",
    "lighthouse with red and white horizontal stripes",
]


def build_corpus() -> list:
    corpus = list(BASE_STRINGS) + list(DESCRIPTIONS)
    # pad deterministically to exactly 200 with composed variants
    i = 0
    while len(corpus) < 200:
        a = DESCRIPTIONS[i % len(DESCRIPTIONS)]
        b = DESCRIPTIONS[(i * 7 + 3) % len(DESCRIPTIONS)]
        corpus.append(f"{a}, paired with {b}")
        i += 1
    return corpus[:200]


def decode_piece(piece: str) -> str:
    u2b = unicode_to_bytes()
    if piece.endswith(END_OF_WORD):
        piece = piece[: -len(END_OF_WORD)]
    data = bytes(u2b[ch] for ch in piece if ch in u2b)
    return data.decode("utf-8", errors="replace")


def main():
    from transformers import CLIPTokenizer

    with open(TOKENIZER_DIR / "vocab.json", encoding="utf-8") as fh:
        vocab = json.load(fh)
    merges = []
    with open(TOKENIZER_DIR / "merges.txt", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            merges.append(tuple(line.split(" ")))
    tok = CLIPTokenizer(vocab=vocab, merges=merges)
    corpus = build_corpus()
    entries = []
    for text in corpus:
        ids = tok(text, add_special_tokens=False)["input_ids"]
        pieces = tok.convert_ids_to_tokens(ids)
        entries.append({"text": text, "tokens": [decode_piece(p) for p in pieces]})

    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT_PATH, "w", encoding="utf-8") as fh:
        json.dump({"n": len(entries), "entries": entries}, fh, ensure_ascii=False, indent=1)
        fh.write("\n")
    print(f"wrote {len(entries)} fixture entries -> {OUT_PATH}")


if __name__ == "__main__":
    main()
