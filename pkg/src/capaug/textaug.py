"""Paraphrase-based caption expansion.

Duplicates are dropped by exact byte equality after Unicode NFC
normalization and whitespace trimming, both against each other and against
the parent caption, so each image keeps at most k+1 distinct captions.
"""

import json
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .corpus import CaptionRecord, Corpus, ExampleRecord
from .errors import UnknownCaptionId
from .util import json_line


def _canon(text: str) -> str:
    return unicodedata.normalize("NFC", text).strip()


@dataclass(frozen=True)
class ParaphraseSet:
    parent_caption_id: int
    paraphrases: tuple[str, ...]
    k_requested: int


def dedup_paraphrases(parent_text: str, candidates) -> tuple[str, ...]:
    """Drop candidates equal to the parent or to an earlier candidate."""
    seen = {_canon(parent_text)}
    kept = []
    for cand in candidates:
        key = _canon(cand)
        if not key or key in seen:
            continue
        seen.add(key)
        kept.append(cand)
    return tuple(kept)


def expand_paraphrases(
    caption: CaptionRecord, k: int, backend, seed: int
) -> ParaphraseSet:
    """Request k paraphrases from the backend and deduplicate, keeping order."""
    raw = backend.paraphrase(caption.text, k, seed) if k > 0 else []
    return ParaphraseSet(
        parent_caption_id=caption.caption_id,
        paraphrases=dedup_paraphrases(caption.text, raw),
        k_requested=k,
    )


def expand_corpus(corpus: Corpus, k: int, backend, seed: int, parallelism: int = 1):
    """Paraphrase every human caption; results keyed and ordered by caption_id."""
    caps = [c for c in corpus.captions() if c.origin == "human"]
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            sets = list(pool.map(lambda c: expand_paraphrases(c, k, backend, seed), caps))
    else:
        sets = [expand_paraphrases(c, k, backend, seed) for c in caps]
    return {ps.parent_caption_id: ps for ps in sorted(sets, key=lambda s: s.parent_caption_id)}


def build_coco_text(corpus: Corpus, paraphrase_map: dict) -> Corpus:
    """Add paraphrases as extra captions; images are untouched.

    Paraphrase caption ids are allocated after the corpus maximum so they
    never collide with existing ids.
    """
    known = {c.caption_id for c in corpus.captions()}
    for cap_id in paraphrase_map:
        if cap_id not in known:
            raise UnknownCaptionId(f"paraphrase map references unknown caption {cap_id}")
    next_id = max(known, default=0) + 1
    examples = []
    for ex in corpus.examples:
        caps = list(ex.captions)
        for cap in ex.captions:
            pset = paraphrase_map.get(cap.caption_id)
            if pset is None:
                continue
            for text in pset.paraphrases:
                caps.append(
                    CaptionRecord(
                        caption_id=next_id,
                        text=text,
                        origin="paraphrase",
                        parent_caption_id=cap.caption_id,
                    )
                )
                next_id += 1
        examples.append(
            ExampleRecord(image_id=ex.image_id, captions=tuple(caps), image_path=ex.image_path)
        )
    return Corpus(examples=examples, split_name=corpus.split_name)


# ---------------------------------------------------------------------------
# paraphrase map serialization: one ParaphraseSet per line


def save_paraphrase_map(paraphrase_map: dict, path, seed: int | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json_line({"format": "capaug-paraphrases", "seed": seed}) + "\n")
        for cap_id in sorted(paraphrase_map):
            ps = paraphrase_map[cap_id]
            fh.write(
                json_line(
                    {
                        "parent_caption_id": ps.parent_caption_id,
                        "paraphrases": list(ps.paraphrases),
                        "k_requested": ps.k_requested,
                    }
                )
                + "\n"
            )


def load_paraphrase_map(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        fh.readline()  # header
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out[rec["parent_caption_id"]] = ParaphraseSet(
                parent_caption_id=rec["parent_caption_id"],
                paraphrases=tuple(rec["paraphrases"]),
                k_requested=rec["k_requested"],
            )
    return out
