#!/usr/bin/env python3
"""Train the bundled BPE tokenizer assets (vocab.json / merges.txt).

Deterministic byte-pair training over the embedded corpus below:
most-frequent pair wins each round, ties broken by lexicographically
smallest pair. Output follows the published checkpoint layout, so the
files are interchangeable with a real tokenizer directory.

Run from the repo root after an editable install:

    python3 scripts/train_tokenizer_assets.py
"""

import json
import sys
from collections import Counter
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from bankaudit.text_metrics import CLIP_SPLIT, END_OF_WORD, bytes_to_unicode, clean_text

N_MERGES = 1200
OUT_DIR = REPO / "src" / "bankaudit" / "data" / "tokenizer"

# Repeated description-like sentences; the repetition weights decide which
# words end up as single tokens.
SENTENCES = [
    "a wooden chair with a curved backrest and four tapered legs",
    "modern red velvet armchair with ornate armrest and brass studs",
    "rustic oak dining table with a rectangular tabletop and sturdy frame",
    "small ceramic bowl with a glossy blue glaze and rounded rim",
    "vintage leather sofa with tufted cushions and walnut feet",
    "minimalist steel desk lamp with an adjustable arm and round base",
    "tall storage cabinet with two doors, three shelves and metal handles",
    "antique marble side table with a circular top and carved pedestal",
    "industrial bookshelf made of reclaimed wood and black iron pipes",
    "plastic office chair with mesh backrest, armrests and caster wheels",
    "glass coffee table with chrome legs and a transparent oval top",
    "scandinavian birch bed frame with a slatted headboard",
    "ornate gothic mirror with a gilded frame and arched top",
    "sleek electric kettle with a stainless steel body and black handle",
    "large potted plant with broad green leaves in a terracotta pot",
    "red sports car with aerodynamic curves and alloy wheels",
    "compact microwave oven with a digital display and rotating plate",
    "porcelain teapot with a floral pattern and curved spout",
    "futuristic drone with four rotors and a matte gray shell",
    "classic grandfather clock in polished mahogany with roman numerals",
    "woven wicker basket with a hinged lid and leather straps",
    "stone garden fountain with three tiers and a weathered finish",
    "velvet ottoman with golden tassels and short wooden legs",
    "white marble kitchen island with a waterfall edge",
    "adjustable standing desk with a bamboo surface and steel legs",
    "children's bunk bed with a ladder and safety rail in painted pine",
    "suspended pendant light with a copper shade and fabric cord",
    "low concrete bench with a smooth brushed surface",
    "antique brass telescope on a tripod of polished walnut",
    "soft gray wool rug with a geometric diamond pattern",
    "outdoor rattan lounge set with waterproof cream cushions",
    "heavy cast iron skillet with a long handle and pour spouts",
    "square ceramic vase with a crackled turquoise glaze",
    "folding metal ladder with rubber feet and five steps",
    "upholstered dining chair with a high backrest and chrome legs",
    "electric guitar with a sunburst finish and maple neck",
    "wall mounted shelf of floating oak planks and hidden brackets",
    "round mirror framed in woven seagrass rope",
    "retro arcade machine with a painted cabinet and glowing screen",
    "ergonomic gaming chair with lumbar support and red stitching",
    "the object rests on the ground and faces forward",
    "the model has clean topology and a single texture atlas",
    "a detailed asset suitable for real time rendering in games",
    "this item was measured in meters and anchored at the bottom",
    "a house with a sloped roof, brick walls and wooden shutters",
    "an old stone bridge crossing a narrow river",
    "a small sailboat with a white hull and tall mast",
    "a delivery truck with a boxy cargo compartment",
    "a golden retriever dog standing on four legs",
    "a gray tabby cat curled on a cushion",
    "a tall pine tree with dense green needles",
    "a flowering shrub with pink blossoms",
    "a smartphone with an edge to edge screen",
    "a laptop computer with a backlit keyboard",
    "a dinner plate with a painted rim",
    "a wine glass with a slender stem",
    "numbers like 1 2 3 4 5 6 7 8 9 0 appear in some descriptions",
    "punctuation, commas, and hyphens - like these - appear too.",
    "it's a designer's choice; they'll often say it wasn't planned",
]

# extra weight for words that must merge into single tokens
EMPHASIS = {
    "chair": 220, "table": 200, "desk": 120, "lamp": 120, "sofa": 110,
    "shelf": 100, "cabinet": 100, "bed": 90, "bench": 80, "stool": 80,
    "wooden": 160, "wood": 140, "metal": 140, "glass": 120, "steel": 110,
    "plastic": 110, "leather": 110, "fabric": 100, "marble": 100,
    "velvet": 100, "walnut": 90, "chrome": 90, "oak": 90, "pine": 80,
    "ceramic": 90, "stone": 90, "brass": 80, "iron": 80, "bamboo": 70,
    "red": 150, "blue": 130, "green": 130, "white": 120, "black": 120,
    "gray": 100, "brown": 100, "yellow": 90, "orange": 80, "purple": 70,
    "silver": 80, "golden": 80, "scarlet": 70, "metallic": 80,
    "gradient": 70, "translucent": 70, "transparent": 70,
    "modern": 120, "vintage": 100, "antique": 90, "rustic": 80,
    "ornate": 90, "minimalist": 80, "industrial": 80, "elegant": 70,
    "curved": 110, "round": 110, "rounded": 90, "square": 100,
    "rectangular": 90, "circular": 80, "oval": 70, "tapered": 70,
    "angular": 60, "cylindrical": 60, "spherical": 60,
    "armrest": 90, "backrest": 90, "drawer": 80, "handle": 90,
    "cushion": 80, "leg": 120, "legs": 120, "door": 90, "doors": 70,
    "frame": 90, "base": 90, "top": 100, "seat": 90, "wheel": 70,
    "wheels": 70, "headboard": 60, "pedestal": 60, "knob": 50,
    "with": 250, "and": 250, "the": 250, "of": 200, "a": 250,
    "small": 100, "large": 100, "tall": 90, "wide": 80, "narrow": 70,
    "object": 90, "asset": 80, "model": 80, "house": 80, "car": 90,
    "tree": 80, "plant": 80, "dog": 70, "cat": 70, "bowl": 80,
    "plate": 80, "vase": 70, "cup": 70, "bottle": 60, "screen": 70,
    "keyboard": 60, "phone": 60, "laptop": 60,
}


def train(word_counts: Counter, n_merges: int):
    b2u = bytes_to_unicode()
    items = []
    for word, count in sorted(word_counts.items()):
        chars = [b2u[b] for b in word.encode("utf-8")]
        chars[-1] = chars[-1] + END_OF_WORD
        items.append((tuple(chars), count))

    merges = []
    for _ in range(n_merges):
        pair_counts = Counter()
        for syms, count in items:
            for i in range(len(syms) - 1):
                pair_counts[(syms[i], syms[i + 1])] += count
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        if best_count < 2:
            break
        best = min(p for p, c in pair_counts.items() if c == best_count)
        merges.append(best)
        merged_items = []
        a, b = best
        for syms, count in items:
            out = []
            i = 0
            while i < len(syms):
                if i < len(syms) - 1 and syms[i] == a and syms[i + 1] == b:
                    out.append(a + b)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            merged_items.append((tuple(out), count))
        items = merged_items
    return merges


def main():
    corpus = " ".join(SENTENCES)
    counts = Counter(CLIP_SPLIT.findall(clean_text(corpus)))
    for word, weight in EMPHASIS.items():
        counts[word] += weight

    merges = train(counts, N_MERGES)
    print(f"trained {len(merges)} merges over {len(counts)} distinct words")

    b2u_chars = list(bytes_to_unicode().values())
    vocab_list = b2u_chars + [c + END_OF_WORD for c in b2u_chars]
    for a, b in merges:
        vocab_list.append(a + b)
    vocab_list += ["<|startoftext|>", "<|endoftext|>"]
    vocab = {}
    for tok in vocab_list:
        if tok not in vocab:
            vocab[tok] = len(vocab)

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with open(OUT_DIR / "vocab.json", "w", encoding="utf-8") as fh:
        json.dump(vocab, fh, ensure_ascii=False)
        fh.write("\n")
    with open(OUT_DIR / "merges.txt", "w", encoding="utf-8") as fh:
        fh.write("#version: 0.2\n")
        for a, b in merges:
            fh.write(f"{a} {b}\n")
    print(f"vocab size {len(vocab)} -> {OUT_DIR}")

    # the spec's worked example requires these to be single tokens
    for probe in ("chair", "table", "red", "wooden"):
        assert probe + END_OF_WORD in vocab, f"{probe!r} did not merge fully"
    from bankaudit.text_metrics import TokenizerModel, tokenize

    model = TokenizerModel(vocab, merges)
    assert tokenize("chair", model) == ["chair"], tokenize("chair", model)
    print("sanity: tokenize('chair') ->", tokenize("chair", model))
    print("sanity: tokenize('armchair') ->", tokenize("armchair", model))


if __name__ == "__main__":
    main()
