import json
import random
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from capaug.corpus import CaptionRecord, Corpus, ExampleRecord

WORDS = (
    "a man riding horse dog cat sits on the beach with red kite pizza "
    "woman kitchen street table small large two young standing"
).split()


def random_corpus(rng: random.Random, max_examples=20, max_captions=8) -> Corpus:
    n = rng.randint(1, max_examples)
    examples = []
    cap_id = 0
    for i in range(n):
        caps = []
        for _ in range(rng.randint(1, max_captions)):
            text = " ".join(rng.choices(WORDS, k=rng.randint(2, 8)))
            caps.append(CaptionRecord(caption_id=cap_id, text=text))
            cap_id += 1
        examples.append(ExampleRecord(image_id=i, captions=tuple(caps)))
    return Corpus(examples=examples)


def make_corpus(caption_counts, start_image_id=0) -> Corpus:
    """Corpus with the given captions-per-example counts and simple texts."""
    examples = []
    cap_id = 0
    for i, c in enumerate(caption_counts):
        caps = tuple(
            CaptionRecord(caption_id=cap_id + j, text=f"caption {cap_id + j} about things")
            for j in range(c)
        )
        cap_id += c
        examples.append(ExampleRecord(image_id=start_image_id + i, captions=caps))
    return Corpus(examples=examples)


def write_annotations(path: Path, images, annotations) -> Path:
    path.write_text(json.dumps({"images": images, "annotations": annotations}))
    return path


@pytest.fixture
def tiny_annotations(tmp_path):
    return write_annotations(
        tmp_path / "ann.json",
        images=[{"id": 1, "file_name": "000001.jpg"}],
        annotations=[
            {"id": 10, "image_id": 1, "caption": "A man riding a horse."},
            {"id": 11, "image_id": 1, "caption": "Someone rides a dark horse."},
        ],
    )


@pytest.fixture
def rng():
    return random.Random(1234)


def random_image(rng_seed: int, size=16) -> np.ndarray:
    g = np.random.default_rng(rng_seed)
    return g.integers(0, 256, size=(size, size, 3), dtype=np.uint8)


def write_png(path: Path, pixels: np.ndarray) -> Path:
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")
    return path
