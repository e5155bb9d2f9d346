"""Pair-quality scoring and top-fraction filtering.

Three criteria per pair: a CLIP-style image-text cosine score (raw scale
0-2.5, weight 2.5, clamped at zero), a VIFIDEL-style detected-object /
caption similarity (relaxed one-directional word-mover similarity over
embeddings, in [0,1]), and an opaque IQA scalar taken verbatim from the
backend. Summary output also reports the cosine-derived scores on a x100
display scale: 100*max(cos,0) for the CLIP-style score (so 2.5 raw shows
as 100.0) and 100*vifidel. The raw papers behind these metrics do not pin
a display convention; this one is an explicit choice, documented here and
in the README.
"""

import importlib.resources
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .capmetrics import tokenize
from .dataset_builder import PairManifest, PairRecord
from .errors import (
    CoverageMismatch,
    DimensionMismatch,
    EmptyLabels,
    EmptyTable,
    MalformedAnnotation,
    PipelineError,
    ZeroVector,
)
from .util import json_line

CLIP_WEIGHT = 2.5

_STOPWORDS: frozenset | None = None


def stopwords() -> frozenset:
    global _STOPWORDS
    if _STOPWORDS is None:
        text = importlib.resources.files("capaug.data").joinpath("stopwords.txt").read_text()
        _STOPWORDS = frozenset(text.split())
    return _STOPWORDS


@dataclass(frozen=True)
class QualityRecord:
    pair_id: int
    clipscore: float
    vifidel: float
    musiq: float
    no_objects: bool = False  # detector returned no labels; vifidel forced to 0


@dataclass
class QualityTable:
    manifest_name: str
    records: list[QualityRecord]
    errors: list = field(default_factory=list)

    def __post_init__(self):
        self.records = sorted(self.records, key=lambda r: r.pair_id)
        ids = [r.pair_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate pair_id in quality table")

    def __len__(self):
        return len(self.records)


def _cosine(v, w) -> float:
    nv = math.sqrt(sum(x * x for x in v))
    nw = math.sqrt(sum(x * x for x in w))
    if nv == 0.0 or nw == 0.0:
        raise ZeroVector("cosine of zero vector")
    return sum(x * y for x, y in zip(v, w)) / (nv * nw)


def clip_score(image_embedding, text_embedding) -> float:
    """2.5 * max(cos(image, text), 0)."""
    if len(image_embedding) != len(text_embedding):
        raise DimensionMismatch(
            f"dims {len(image_embedding)} vs {len(text_embedding)}"
        )
    return CLIP_WEIGHT * max(_cosine(image_embedding, text_embedding), 0.0)


def content_words(caption_tokens) -> list[str]:
    """Caption tokens minus the stopword list; falls back to all tokens."""
    kept = [t for t in caption_tokens if t not in stopwords()]
    return kept if kept else list(caption_tokens)


def vifidel_score(detected_labels, caption_tokens, embed) -> float:
    """Mean over labels of the best (clamped) cosine to a caption content word.

    ``embed`` is a text-embedding backend handle (embed_text(texts) ->
    vectors). A relaxed one-directional word-mover similarity: each label
    greedily matches its closest caption word.
    """
    if not detected_labels:
        raise EmptyLabels("no detected objects")
    if not caption_tokens:
        raise ValueError("caption_tokens must be non-empty")
    words = content_words(caption_tokens)
    vectors = embed.embed_text(list(detected_labels) + words)
    label_vecs = vectors[: len(detected_labels)]
    word_vecs = vectors[len(detected_labels):]
    total = 0.0
    for lv in label_vecs:
        best = max(_cosine(lv, wv) for wv in word_vecs)
        total += max(best, 0.0)
    return total / len(label_vecs)


def make_image_resolver(corpus=None, image_root=None):
    """Map a PairRecord to its image file.

    Synthetic refs resolve to cap<caption_id>.png under image_root; true
    refs resolve to the corpus example's image_path.
    """
    by_image = {ex.image_id: ex for ex in corpus.examples} if corpus is not None else {}

    def resolve(pair: PairRecord) -> Path:
        if pair.image_kind == "synthetic":
            if image_root is None:
                raise PipelineError("synthetic pair but no image_root configured")
            return Path(image_root) / f"cap{pair.image_ref_id}.png"
        ex = by_image.get(pair.image_ref_id)
        if ex is None or ex.image_path is None:
            raise PipelineError(f"no image file for true image {pair.image_ref_id}")
        return Path(ex.image_path)

    return resolve


def score_pairs(manifest: PairManifest, backends, resolve_image) -> QualityTable:
    """One QualityRecord per pair; per-pair failures are collected, not fatal.

    ``backends`` must expose embed_text, embed_image, detect and iqa;
    ``resolve_image`` maps a PairRecord to its image path (see
    make_image_resolver).
    """
    records = []
    errors = []
    img_cache: dict = {}
    for pair in manifest.pairs:
        try:
            path = Path(resolve_image(pair))
            key = str(path)
            if key not in img_cache:
                png = path.read_bytes()
                img_cache[key] = (
                    backends.embed_image(png),
                    backends.detect(png),
                    backends.iqa(png),
                )
            img_vec, labels, musiq = img_cache[key]
            txt_vec = backends.embed_text([pair.caption_text])[0]
            clip = clip_score(img_vec, txt_vec)
            tokens = tokenize(pair.caption_text)
            try:
                vifidel = vifidel_score(labels, tokens, backends)
                no_objects = False
            except EmptyLabels:
                vifidel = 0.0
                no_objects = True
            records.append(
                QualityRecord(
                    pair_id=pair.pair_id,
                    clipscore=clip,
                    vifidel=vifidel,
                    musiq=float(musiq),
                    no_objects=no_objects,
                )
            )
        except (PipelineError, OSError) as exc:
            errors.append((pair.pair_id, str(exc)))
    return QualityTable(manifest_name=manifest.name, records=records, errors=errors)


def filter_top_fraction(
    manifest: PairManifest, table: QualityTable, metric: str, fraction: float
) -> PairManifest:
    """Keep the max(1, floor(fraction*N)) highest-scoring pairs.

    Ties break toward ascending pair_id; kept pairs preserve their original
    relative order and are renumbered from 0.
    """
    if metric not in ("clipscore", "vifidel", "musiq"):
        raise ValueError(f"unknown metric {metric!r}")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    scores = {r.pair_id: getattr(r, metric) for r in table.records}
    missing = [p.pair_id for p in manifest.pairs if p.pair_id not in scores]
    if missing:
        raise CoverageMismatch(f"quality table missing pair ids {missing[:5]}...")
    n = len(manifest.pairs)
    keep_count = int(fraction * n)
    if n > 0 and keep_count == 0:
        keep_count = 1
    ranked = sorted(manifest.pairs, key=lambda p: (-scores[p.pair_id], p.pair_id))
    kept_ids = {p.pair_id for p in ranked[:keep_count]}
    pairs = [
        PairRecord(
            pair_id=i,
            image_kind=p.image_kind,
            image_ref_id=p.image_ref_id,
            caption_text=p.caption_text,
            caption_origin=p.caption_origin,
            source_caption_id=p.source_caption_id,
            group_image_id=p.group_image_id,
        )
        for i, p in enumerate(p for p in manifest.pairs if p.pair_id in kept_ids)
    ]
    return PairManifest(
        name=f"{manifest.name}_top{fraction:g}_{metric}",
        scheme=manifest.scheme,
        mix_fraction=manifest.mix_fraction,
        build_seed=manifest.build_seed,
        pairs=pairs,
    )


def quality_summary(table: QualityTable) -> dict:
    """Arithmetic means, plus the x100 display scale for the cosine scores."""
    if not table.records:
        raise EmptyTable(f"quality table {table.manifest_name!r} is empty")
    n = len(table.records)
    mean_clip = sum(r.clipscore for r in table.records) / n
    mean_vif = sum(r.vifidel for r in table.records) / n
    mean_musiq = sum(r.musiq for r in table.records) / n
    return {
        "manifest_name": table.manifest_name,
        "pair_count": n,
        "clipscore_mean": mean_clip,
        "vifidel_mean": mean_vif,
        "musiq_mean": mean_musiq,
        "clipscore_mean_x100": 100.0 * mean_clip / CLIP_WEIGHT,
        "vifidel_mean_x100": 100.0 * mean_vif,
    }


# ---------------------------------------------------------------------------
# quality table file: header line + one record per pair


def save_quality_table(table: QualityTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            json_line({"format": "capaug-quality", "manifest_name": table.manifest_name}) + "\n"
        )
        for r in table.records:
            fh.write(
                json_line(
                    {
                        "pair_id": r.pair_id,
                        "clipscore": round(r.clipscore, 10),
                        "vifidel": round(r.vifidel, 10),
                        "musiq": round(r.musiq, 10),
                        "no_objects": r.no_objects,
                    }
                )
                + "\n"
            )


def load_quality_table(path) -> QualityTable:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "capaug-quality":
            raise MalformedAnnotation(f"{path}: not a capaug quality table")
        records = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            records.append(QualityRecord(**json.loads(line)))
    return QualityTable(manifest_name=header["manifest_name"], records=records)
