"""Construct training-pair manifests from a corpus and a generation set.

Schemes:
  sd_base  one pair per human caption: (image generated from caption i, caption i)
  sd_true  within each example, every generated image is paired with all of
           that example's human captions (including its own source caption)
  sd_para  each generated image is paired with its source caption plus that
           caption's surviving paraphrases
  coco     the real image paired with each of its human captions
  mix      n% of examples contribute their true pairs; the rest are expanded
           by a synthetic scheme

Pairs are ordered by (group_image_id, image_ref kind, image_ref id,
source_caption_id) and renumbered 0..N-1 so rebuilds are byte-identical.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .capmetrics import tokenize
from .corpus import Corpus, sample_examples
from .errors import MalformedAnnotation, MissingGeneration, UnknownCaptionId
from .synthesis import GenerationSet
from .util import json_line

SYNTHETIC_SCHEMES = ("sd_base", "sd_true", "sd_para")
SCHEMES = SYNTHETIC_SCHEMES + ("coco", "mix")


@dataclass(frozen=True)
class PairRecord:
    pair_id: int
    image_kind: str  # "true_image" | "synthetic"
    image_ref_id: int
    caption_text: str
    caption_origin: str  # "human" | "paraphrase"
    source_caption_id: int
    group_image_id: int


@dataclass
class PairManifest:
    name: str
    scheme: str
    pairs: list[PairRecord]
    build_seed: int = 42
    mix_fraction: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "mix" and self.mix_fraction is None:
            raise ValueError("mix manifests require mix_fraction")
        for i, p in enumerate(self.pairs):
            if p.pair_id != i:
                raise ValueError(f"pair_id {p.pair_id} at position {i}; expected {i}")

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class ManifestStats:
    image_count: int
    pair_count: int
    distinct_caption_count: int
    vocab_size: int


def _ordered(raw_pairs) -> list[PairRecord]:
    raw_pairs.sort(key=lambda p: (p[0], p[1], p[2], p[5]))
    return [
        PairRecord(
            pair_id=i,
            group_image_id=g,
            image_kind=kind,
            image_ref_id=ref,
            caption_text=text,
            caption_origin=origin,
            source_caption_id=src,
        )
        for i, (g, kind, ref, text, origin, src) in enumerate(raw_pairs)
    ]


def _require_generation(gen: GenerationSet, caption_id: int):
    g = gen.get(caption_id)
    if g is None:
        raise MissingGeneration(f"no generated image for caption {caption_id}")
    return g


def _sd_base_pairs(corpus: Corpus, gen: GenerationSet):
    for ex in corpus.examples:
        for cap in ex.captions:
            if cap.origin != "human":
                continue
            g = _require_generation(gen, cap.caption_id)
            yield (ex.image_id, "synthetic", g.image_id, cap.text, "human", cap.caption_id)


def _sd_true_pairs(corpus: Corpus, gen: GenerationSet):
    for ex in corpus.examples:
        humans = [c for c in ex.captions if c.origin == "human"]
        for img_cap in humans:
            g = _require_generation(gen, img_cap.caption_id)
            for cap in humans:
                yield (ex.image_id, "synthetic", g.image_id, cap.text, "human", cap.caption_id)


def _sd_para_pairs(corpus: Corpus, gen: GenerationSet, paraphrase_map: dict):
    # the map may cover a superset of this corpus (mixes pass sub-corpora)
    for ex in corpus.examples:
        for cap in ex.captions:
            if cap.origin != "human":
                continue
            g = _require_generation(gen, cap.caption_id)
            yield (ex.image_id, "synthetic", g.image_id, cap.text, "human", cap.caption_id)
            pset = paraphrase_map.get(cap.caption_id)
            if pset is None:
                continue
            for text in pset.paraphrases:
                yield (ex.image_id, "synthetic", g.image_id, text, "paraphrase", cap.caption_id)


def _true_pairs(corpus: Corpus):
    for ex in corpus.examples:
        for cap in ex.captions:
            if cap.origin != "human":
                continue
            yield (ex.image_id, "true_image", ex.image_id, cap.text, "human", cap.caption_id)


def build_sd_base(corpus: Corpus, gen: GenerationSet, build_seed: int = 42) -> PairManifest:
    return PairManifest(
        name="sd_base", scheme="sd_base", build_seed=build_seed,
        pairs=_ordered(list(_sd_base_pairs(corpus, gen))),
    )


def build_sd_true(corpus: Corpus, gen: GenerationSet, build_seed: int = 42) -> PairManifest:
    return PairManifest(
        name="sd_true", scheme="sd_true", build_seed=build_seed,
        pairs=_ordered(list(_sd_true_pairs(corpus, gen))),
    )


def build_sd_para(
    corpus: Corpus, gen: GenerationSet, paraphrase_map: dict, build_seed: int = 42
) -> PairManifest:
    known = {c.caption_id for c in corpus.captions()}
    for cap_id in paraphrase_map:
        if cap_id not in known:
            raise UnknownCaptionId(f"paraphrase map references unknown caption {cap_id}")
    return PairManifest(
        name="sd_para", scheme="sd_para", build_seed=build_seed,
        pairs=_ordered(list(_sd_para_pairs(corpus, gen, paraphrase_map))),
    )


def build_coco(corpus: Corpus, build_seed: int = 42) -> PairManifest:
    """Real image-caption pairs, one per human caption."""
    return PairManifest(
        name="coco", scheme="coco", build_seed=build_seed,
        pairs=_ordered(list(_true_pairs(corpus))),
    )


def build_mix(
    corpus: Corpus,
    fraction: float,
    scheme: str,
    gen: GenerationSet,
    paraphrase_map: dict | None = None,
    seed: int = 42,
    expand_all: bool = False,
) -> PairManifest:
    """n% true pairs combined with a synthetic scheme over the remainder.

    With expand_all=True the synthetic scheme covers every example, not just
    the remainder (the sampled examples keep their true pairs either way).
    """
    if scheme not in SYNTHETIC_SCHEMES:
        raise ValueError(f"mix scheme must be one of {SYNTHETIC_SCHEMES}, got {scheme!r}")
    sampled, remainder = sample_examples(corpus, fraction, seed)
    synth_corpus = corpus if expand_all else remainder
    raw = list(_true_pairs(sampled))
    if scheme == "sd_base":
        raw += list(_sd_base_pairs(synth_corpus, gen))
    elif scheme == "sd_true":
        raw += list(_sd_true_pairs(synth_corpus, gen))
    else:
        raw += list(_sd_para_pairs(synth_corpus, gen, paraphrase_map or {}))
    return PairManifest(
        name=f"mix{fraction:g}_{scheme}",
        scheme="mix",
        mix_fraction=fraction,
        build_seed=seed,
        pairs=_ordered(raw),
    )


def manifest_stats(manifest: PairManifest, min_count: int = 5) -> ManifestStats:
    """Distinct images, pair count, distinct caption texts, vocabulary size.

    Vocabulary counts tokens over every pair's caption (with multiplicity),
    keeping tokens that reach min_count, same rule as corpus vocabularies.
    """
    images = {(p.image_kind, p.image_ref_id) for p in manifest.pairs}
    texts = {p.caption_text for p in manifest.pairs}
    counts: dict[str, int] = {}
    for p in manifest.pairs:
        for tok in tokenize(p.caption_text):
            counts[tok] = counts.get(tok, 0) + 1
    vocab = sum(1 for c in counts.values() if c >= min_count)
    return ManifestStats(
        image_count=len(images),
        pair_count=len(manifest.pairs),
        distinct_caption_count=len(texts),
        vocab_size=vocab,
    )


# ---------------------------------------------------------------------------
# manifest file: header line + one pair per line, fixed field order


def save_manifest(manifest: PairManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            json_line(
                {
                    "format": "capaug-manifest",
                    "name": manifest.name,
                    "scheme": manifest.scheme,
                    "mix_fraction": manifest.mix_fraction,
                    "build_seed": manifest.build_seed,
                }
            )
            + "\n"
        )
        for p in manifest.pairs:
            fh.write(
                json_line(
                    {
                        "pair_id": p.pair_id,
                        "image_kind": p.image_kind,
                        "image_ref_id": p.image_ref_id,
                        "caption_text": p.caption_text,
                        "caption_origin": p.caption_origin,
                        "source_caption_id": p.source_caption_id,
                        "group_image_id": p.group_image_id,
                    }
                )
                + "\n"
            )


def load_manifest(path) -> PairManifest:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "capaug-manifest":
            raise MalformedAnnotation(f"{path}: not a capaug manifest file")
        pairs = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            pairs.append(PairRecord(**rec))
    return PairManifest(
        name=header["name"],
        scheme=header["scheme"],
        mix_fraction=header.get("mix_fraction"),
        build_seed=header.get("build_seed", 42),
        pairs=pairs,
    )
