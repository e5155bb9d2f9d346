"""COCO-style corpus ingestion, Karpathy splits, vocabulary and statistics.

A corpus is an ordered collection of examples (one image with its captions),
kept sorted by image id so every downstream artifact is deterministic.
"""

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .capmetrics import tokenize
from .errors import MalformedAnnotation, MissingCaptions, UnknownSplit

KNOWN_SPLITS = ("train", "val", "test", "all")
DEFAULT_MIN_COUNT = 5


@dataclass(frozen=True)
class CaptionRecord:
    caption_id: int
    text: str
    origin: str = "human"  # "human" | "paraphrase"
    parent_caption_id: int | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise MalformedAnnotation(f"caption {self.caption_id}: empty text")
        if self.origin not in ("human", "paraphrase"):
            raise MalformedAnnotation(f"caption {self.caption_id}: bad origin {self.origin!r}")
        if self.origin == "paraphrase" and self.parent_caption_id is None:
            raise MalformedAnnotation(
                f"caption {self.caption_id}: paraphrase without parent_caption_id"
            )


@dataclass(frozen=True)
class ExampleRecord:
    image_id: int
    captions: tuple[CaptionRecord, ...]
    image_path: str | None = None  # absent is legal (caption-only regime)

    def __post_init__(self):
        if not self.captions:
            raise MissingCaptions(f"image {self.image_id} has no captions")


@dataclass
class Corpus:
    examples: list[ExampleRecord] = field(default_factory=list)
    split_name: str = "all"

    def __post_init__(self):
        self.examples = sorted(self.examples, key=lambda ex: ex.image_id)
        seen_img = set()
        seen_cap = set()
        for ex in self.examples:
            if ex.image_id in seen_img:
                raise MalformedAnnotation(f"duplicate image_id {ex.image_id}")
            seen_img.add(ex.image_id)
            for cap in ex.captions:
                if cap.caption_id in seen_cap:
                    raise MalformedAnnotation(f"duplicate caption_id {cap.caption_id}")
                seen_cap.add(cap.caption_id)
        # paraphrases must point at a human caption
        human_ids = {
            c.caption_id for ex in self.examples for c in ex.captions if c.origin == "human"
        }
        for ex in self.examples:
            for cap in ex.captions:
                if cap.origin == "paraphrase" and cap.parent_caption_id not in human_ids:
                    raise MalformedAnnotation(
                        f"caption {cap.caption_id}: parent {cap.parent_caption_id} "
                        "is not a human caption"
                    )

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def captions(self):
        for ex in self.examples:
            yield from ex.captions

    def caption_count(self) -> int:
        return sum(len(ex.captions) for ex in self.examples)


@dataclass(frozen=True)
class Vocabulary:
    tokens: dict
    min_count: int

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.tokens


@dataclass(frozen=True)
class StatsRecord:
    image_count: int
    caption_count: int
    vocab_size: int


def load_annotations(path, split: str = "all", split_path=None) -> Corpus:
    """Load a COCO-style annotation file, optionally restricted to a split.

    The annotation document has an ``images`` array (``id``, ``file_name``)
    and an ``annotations`` array (``id``, ``image_id``, ``caption``). When
    ``split`` is not "all", ``split_path`` must name a document mapping
    image ids to split labels (Karpathy-style).
    """
    if split not in KNOWN_SPLITS:
        raise UnknownSplit(f"unknown split {split!r}; expected one of {KNOWN_SPLITS}")
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedAnnotation(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "images" not in doc or "annotations" not in doc:
        raise MalformedAnnotation(f"{path}: missing 'images'/'annotations' arrays")

    split_map = None
    if split != "all":
        if split_path is None:
            raise UnknownSplit(f"split={split!r} requires a split file")
        raw = json.loads(Path(split_path).read_text(encoding="utf-8"))
        split_map = {int(k): v for k, v in raw.items()}

    try:
        images = {int(im["id"]): im.get("file_name") for im in doc["images"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedAnnotation(f"{path}: bad image entry: {exc}") from exc

    caps_by_image = {img_id: [] for img_id in images}
    for ann in doc["annotations"]:
        try:
            img_id = int(ann["image_id"])
            cap = CaptionRecord(caption_id=int(ann["id"]), text=str(ann["caption"]))
        except MalformedAnnotation:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedAnnotation(f"{path}: bad annotation entry: {exc}") from exc
        if img_id not in caps_by_image:
            raise MalformedAnnotation(f"{path}: annotation {cap.caption_id} references "
                                      f"unknown image {img_id}")
        caps_by_image[img_id].append(cap)

    examples = []
    for img_id in sorted(images):
        if split_map is not None and split_map.get(img_id) != split:
            continue
        caps = sorted(caps_by_image[img_id], key=lambda c: c.caption_id)
        if not caps:
            raise MissingCaptions(f"image {img_id} has no captions")
        examples.append(
            ExampleRecord(image_id=img_id, captions=tuple(caps), image_path=images[img_id])
        )
    return Corpus(examples=examples, split_name=split)


def build_vocabulary(corpus: Corpus, min_count: int = DEFAULT_MIN_COUNT) -> Vocabulary:
    """Token counts over all captions, keeping tokens with count >= min_count."""
    counts = {}
    for cap in corpus.captions():
        for tok in tokenize(cap.text):
            counts[tok] = counts.get(tok, 0) + 1
    kept = {t: c for t, c in sorted(counts.items()) if c >= min_count}
    return Vocabulary(tokens=kept, min_count=min_count)


def corpus_stats(corpus: Corpus, min_count: int = DEFAULT_MIN_COUNT) -> StatsRecord:
    vocab = build_vocabulary(corpus, min_count)
    return StatsRecord(
        image_count=len(corpus),
        caption_count=corpus.caption_count(),
        vocab_size=len(vocab),
    )


def sample_examples(corpus: Corpus, fraction: float, seed: int):
    """Split a corpus into (sampled, remainder) by example.

    Keeps floor(fraction/100 * N) examples, chosen uniformly without
    replacement by a seeded RNG. For a fixed seed the sampled sets are
    nested across fractions (a <= b implies sample(a) within sample(b)).
    """
    if not 0 <= fraction <= 100:
        raise ValueError(f"fraction must be in [0, 100], got {fraction}")
    n = len(corpus)
    k = int(fraction / 100 * n)
    order = list(range(n))
    random.Random(seed).shuffle(order)
    chosen = set(order[:k])
    sampled = [ex for i, ex in enumerate(corpus.examples) if i in chosen]
    remainder = [ex for i, ex in enumerate(corpus.examples) if i not in chosen]
    return (
        Corpus(examples=sampled, split_name=corpus.split_name),
        Corpus(examples=remainder, split_name=corpus.split_name),
    )


# ---------------------------------------------------------------------------
# corpus serialization: one example per line, UTF-8 JSON records


def save_corpus(corpus: Corpus, path) -> None:
    from .util import json_line

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json_line({"format": "capaug-corpus", "split_name": corpus.split_name}) + "\n")
        for ex in corpus.examples:
            rec = {
                "image_id": ex.image_id,
                "image_path": ex.image_path,
                "captions": [
                    {
                        "caption_id": c.caption_id,
                        "text": c.text,
                        "origin": c.origin,
                        "parent_caption_id": c.parent_caption_id,
                    }
                    for c in ex.captions
                ],
            }
            fh.write(json_line(rec) + "\n")


def load_corpus(path) -> Corpus:
    examples = []
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "capaug-corpus":
            raise MalformedAnnotation(f"{path}: not a capaug corpus file")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            caps = tuple(
                CaptionRecord(
                    caption_id=c["caption_id"],
                    text=c["text"],
                    origin=c.get("origin", "human"),
                    parent_caption_id=c.get("parent_caption_id"),
                )
                for c in rec["captions"]
            )
            examples.append(
                ExampleRecord(
                    image_id=rec["image_id"], captions=caps, image_path=rec.get("image_path")
                )
            )
    return Corpus(examples=examples, split_name=header.get("split_name", "all"))
