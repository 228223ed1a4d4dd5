"""Command line for the embed sidecar.

    embed --manifest bank/manifest.jsonl --out emb.bin --model hash-v1

Renders four canonical orthographic views per asset, embeds the
description text, the reference image when present, and the views, then
writes one EMBT table plus a `<out>.meta.json` sidecar recording the
render settings the binary format has no room for.

Exit codes mirror the auditing core: 0 clean, 2 when some assets failed
(their rows are simply absent from the table), 1 on fatal problems.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__
from .embed import TEXT_MODEL_DEFAULT, make_embedder
from .errors import EmbedSidecarError, RenderFailure
from .render import AMBIENT, DIFFUSE, LIGHT_DIRECTION, RenderSpec, VIEW_NAMES, render_views
from .table import EmbeddingRow, TAG_REF_IMAGE, TAG_TEXT, VIEW_TAGS, write_table

_VIEW_SUFFIX = {"+X": "px", "-X": "nx", "+Y": "py", "-Y": "ny"}


def _read_manifest(path: Path) -> list:
    entries = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise EmbedSidecarError(f"manifest line {line_no}: {exc}") from exc
                if not isinstance(record, dict) or "asset_id" not in record or "glb_path" not in record:
                    raise EmbedSidecarError(f"manifest line {line_no}: needs asset_id and glb_path")
                entries.append(record)
    except OSError as exc:
        raise EmbedSidecarError(f"cannot read manifest {path}: {exc}") from exc
    if not entries:
        raise EmbedSidecarError(f"manifest {path} has no entries")
    duplicates = [aid for aid, n in Counter(e["asset_id"] for e in entries).items() if n > 1]
    if duplicates:
        raise EmbedSidecarError(f"duplicate asset ids in manifest: {sorted(duplicates)}")
    return entries


def _load_image(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def _dump_renders(directory: Path, asset_id: str, images) -> None:
    from PIL import Image

    directory.mkdir(parents=True, exist_ok=True)
    for view, img in zip(VIEW_NAMES, images):
        Image.fromarray(img).save(directory / f"{asset_id}_{_VIEW_SUFFIX[view]}.png")


def _run(args) -> int:
    if args.views != 4:
        raise EmbedSidecarError(f"the canonical view set is fixed at 4 views, got {args.views}")
    spec = RenderSpec(image_size=args.size)
    entries = _read_manifest(args.manifest)
    embedder = make_embedder(args.model)
    base = args.manifest.resolve().parent

    rows = []
    failures = []
    for record in entries:
        asset_id = record["asset_id"]
        try:
            images = render_views(base / record["glb_path"], spec, asset_id=asset_id)
        except RenderFailure as exc:
            failures.append(asset_id)
            print(f"FAILED {asset_id} [render] RenderFailure: {exc.reason}", file=sys.stderr)
            continue
        if args.dump_renders is not None:
            _dump_renders(args.dump_renders, asset_id, images)

        text = record.get("description", "")
        if not text.strip():
            print(f"WARN {asset_id}: empty description, embedding it anyway", file=sys.stderr)
        rows.append(EmbeddingRow(asset_id, TAG_TEXT, embedder.embed_texts([text])[0]))
        for tag, vec in zip(VIEW_TAGS, embedder.embed_images(images)):
            rows.append(EmbeddingRow(asset_id, tag, vec))

        image_rel = record.get("image_path")
        if image_rel:
            try:
                ref = _load_image(base / image_rel)
            except (OSError, ValueError) as exc:
                failures.append(asset_id)
                print(f"FAILED {asset_id} [ref_image] {type(exc).__name__}: {exc}", file=sys.stderr)
            else:
                rows.append(EmbeddingRow(asset_id, TAG_REF_IMAGE, embedder.embed_images([ref])[0]))

    write_table(rows, args.out, dim=embedder.dim)
    meta = {
        "model": args.model,
        "dim": embedder.dim,
        "assets": len(entries),
        "failed_assets": sorted(set(failures)),
        "render": {
            "projection": "orthographic",
            "views": list(VIEW_NAMES),
            "image_size": spec.image_size,
            "background": spec.background,
            "margin": spec.margin,
            "shading": "flat two-sided wrap lighting",
            "light_direction": [round(float(x), 6) for x in LIGHT_DIRECTION],
            "ambient": AMBIENT,
            "diffuse": DIFFUSE,
            "antialiasing": "none",
        },
    }
    meta_path = Path(str(args.out) + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    ok = len(entries) - len(set(failures))
    print(f"wrote {len(rows)} rows (dim {embedder.dim}) for {ok}/{len(entries)} assets -> {args.out}")
    return 2 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed",
        description="Render canonical views and write an embedding table for a 3D asset bank.",
    )
    parser.add_argument("--manifest", required=True, type=Path, help="JSONL manifest; asset paths resolve relative to it")
    parser.add_argument("--out", required=True, type=Path, help="output embedding table (EMBT binary)")
    parser.add_argument("--model", default=TEXT_MODEL_DEFAULT, help="embedding model id, or hash-v1 for the offline hasher")
    parser.add_argument("--views", type=int, default=4, help="view count; the canonical set is fixed, only 4 is valid")
    parser.add_argument("--size", type=int, default=224, help="render resolution in pixels")
    parser.add_argument("--dump-renders", type=Path, default=None, help="also save the view renders as PNGs here")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except EmbedSidecarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
