"""Builtin reference backends: deterministic, model-free implementations
of every role.

They exist so the service can be deployed, health-checked, and
contract-tested on any machine; replies are seeded purely by the request
payload, so repeated calls are byte-identical. A prompt containing the
sentinel token below trips the safety-checker path exactly like a real
NSFW filter would, which keeps that plumbing testable.
"""

import hashlib
import io
import random

import numpy as np
from PIL import Image

EMBED_DIM = 64
IMAGE_SIZE = 48
NSFW_SENTINEL = "nsfwsentinel"

LABELS = (
    "person", "dog", "cat", "horse", "car", "bus", "bicycle", "pizza",
    "sandwich", "table", "chair", "laptop", "phone", "sink", "surfboard",
)


def _seed(*parts) -> int:
    h = hashlib.sha256()
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1e")
    return int.from_bytes(h.digest()[:8], "big")


class BuiltinModels:
    deterministic = True
    nsfw_sentinel = NSFW_SENTINEL

    def paraphrase(self, text: str, k: int, seed: int) -> list[str]:
        words = text.split()
        out = []
        for i in range(k):
            rng = random.Random(_seed("para", text, seed, i))
            shuffled = words[:]
            rng.shuffle(shuffled)
            out.append(" ".join(shuffled))
        return out

    def txt2img(self, caption: str, seed: int) -> tuple[bytes, bool]:
        rng = np.random.default_rng(_seed("t2i", caption, seed))
        # smooth low-frequency pattern rather than raw noise, so the
        # output looks image-like under IQA-style probing
        x = np.linspace(0, 2 * np.pi, IMAGE_SIZE)
        phases = rng.uniform(0, 2 * np.pi, size=3)
        freqs = rng.uniform(0.5, 3.0, size=3)
        channels = [
            127.5 * (1 + np.sin(f * x[None, :] + f * x[:, None] + p))
            for f, p in zip(freqs, phases)
        ]
        pixels = np.stack(channels, axis=-1).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue(), NSFW_SENTINEL in caption.lower()

    def _unit(self, *parts) -> list[float]:
        rng = np.random.default_rng(_seed(*parts))
        v = rng.standard_normal(EMBED_DIM)
        return (v / np.linalg.norm(v)).tolist()

    def embed_text(self, texts: list[str]) -> list[list[float]]:
        return [self._unit("etext", t) for t in texts]

    def embed_image(self, image_png: bytes) -> list[float]:
        return self._unit("eimg", hashlib.sha256(image_png).hexdigest())

    def detect(self, image_png: bytes) -> list[str]:
        rng = random.Random(_seed("det", hashlib.sha256(image_png).hexdigest()))
        return rng.sample(list(LABELS), rng.randint(1, 3))

    def iqa(self, image_png: bytes) -> float:
        rng = random.Random(_seed("iqa", hashlib.sha256(image_png).hexdigest()))
        return round(rng.uniform(25.0, 85.0), 4)
