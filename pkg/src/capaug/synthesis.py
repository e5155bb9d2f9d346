"""Text-to-image orchestration: one image per caption, NSFW retry, resume.

Backend seeds are derived by hashing (global seed, caption_id, attempt), so
retries, parallel execution, and resumption never change the result. A
newline-delimited ledger under image_root records completed captions and
makes reruns skip them.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import CaptionRecord, Corpus
from .errors import ImageWriteError, NsfwExhausted, PipelineError
from .util import derive_seed, json_line

LEDGER_NAME = "generation_ledger.jsonl"


@dataclass(frozen=True)
class GenerationPolicy:
    image_root: Path
    seed: int = 42
    max_attempts: int = 5
    parallelism: int = 1

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class GeneratedImage:
    image_id: int  # synthetic identifier; equals the source caption id
    path: str
    source_caption_id: int
    attempts: int
    backend_seed: int


@dataclass
class GenerationSet:
    generated: list[GeneratedImage]
    policy: GenerationPolicy
    failures: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self):
        self.generated = sorted(self.generated, key=lambda g: g.source_caption_id)
        ids = [g.source_caption_id for g in self.generated]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate source_caption_id in generation set")
        self._by_caption = {g.source_caption_id: g for g in self.generated}

    def __len__(self):
        return len(self.generated)

    def get(self, caption_id: int) -> GeneratedImage | None:
        return self._by_caption.get(caption_id)


def generate_for_caption(
    caption: CaptionRecord, backend, policy: GenerationPolicy
) -> GeneratedImage:
    """Generate one image for a caption, retrying NSFW-flagged replies.

    The caption text is passed verbatim as the prompt.
    """
    root = Path(policy.image_root)
    for attempt in range(1, policy.max_attempts + 1):
        seed = derive_seed(policy.seed, caption.caption_id, attempt)
        png, nsfw = backend.txt2img(caption.text, seed)
        if nsfw:
            continue
        path = root / f"cap{caption.caption_id}.png"
        try:
            path.write_bytes(png)
        except OSError as exc:
            raise ImageWriteError(f"{path}: {exc}") from exc
        return GeneratedImage(
            image_id=caption.caption_id,
            path=str(path),
            source_caption_id=caption.caption_id,
            attempts=attempt,
            backend_seed=seed,
        )
    raise NsfwExhausted(
        f"caption {caption.caption_id}: all {policy.max_attempts} attempts flagged NSFW"
    )


def _ledger_path(policy: GenerationPolicy) -> Path:
    return Path(policy.image_root) / LEDGER_NAME


def load_ledger(policy: GenerationPolicy) -> dict[int, GeneratedImage]:
    path = _ledger_path(policy)
    out = {}
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                out[rec["source_caption_id"]] = GeneratedImage(**rec)
    return out


def _append_ledger(fh, gen: GeneratedImage) -> None:
    fh.write(
        json_line(
            {
                "image_id": gen.image_id,
                "path": gen.path,
                "source_caption_id": gen.source_caption_id,
                "attempts": gen.attempts,
                "backend_seed": gen.backend_seed,
            }
        )
        + "\n"
    )


def generate_all(corpus: Corpus, backend, policy: GenerationPolicy) -> GenerationSet:
    """One synthetic image per caption; resumable and order-deterministic.

    Captions already present in the ledger are skipped. Per-caption errors
    are collected into ``failures`` instead of aborting the run; completed
    work is committed to the ledger in ascending caption_id order.
    """
    Path(policy.image_root).mkdir(parents=True, exist_ok=True)
    done = load_ledger(policy)
    captions = sorted(corpus.captions(), key=lambda c: c.caption_id)
    todo = [c for c in captions if c.caption_id not in done]

    failures: list[tuple[int, str]] = []
    new_results: dict[int, GeneratedImage] = {}

    def work(cap: CaptionRecord):
        return generate_for_caption(cap, backend, policy)

    with open(_ledger_path(policy), "a", encoding="utf-8") as ledger:
        if policy.parallelism > 1 and todo:
            with ThreadPoolExecutor(max_workers=policy.parallelism) as pool:
                futures = [(cap, pool.submit(work, cap)) for cap in todo]
                # single writer, ascending caption order
                for cap, fut in futures:
                    try:
                        gen = fut.result()
                    except PipelineError as exc:
                        failures.append((cap.caption_id, str(exc)))
                        continue
                    new_results[cap.caption_id] = gen
                    _append_ledger(ledger, gen)
        else:
            for cap in todo:
                try:
                    gen = work(cap)
                except PipelineError as exc:
                    failures.append((cap.caption_id, str(exc)))
                    continue
                new_results[cap.caption_id] = gen
                _append_ledger(ledger, gen)

    done.update(new_results)
    wanted = {c.caption_id for c in captions}
    generated = [g for cid, g in done.items() if cid in wanted]
    return GenerationSet(generated=generated, policy=policy, failures=failures)
