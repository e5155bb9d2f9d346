"""Model-backend handles: HTTP clients for the wire protocol and a
deterministic in-process mock.

Wire protocol (shared with the inference sidecar):
  POST /paraphrase   {text, k, seed}        -> {paraphrases: [str]}
  POST /txt2img      {caption, seed}        -> {image_png_base64, nsfw}
  POST /embed/text   {texts: [str]}         -> {vectors: [[float]]}
  POST /embed/image  {image_png_base64}     -> {vector: [float]}
  POST /detect       {image_png_base64}     -> {labels: [str]}
  POST /iqa          {image_png_base64}     -> {musiq: float}
  GET  /health                              -> {roles, models, deterministic}
"""

import base64
import hashlib
import io
import json
import random

import numpy as np
import requests
from PIL import Image

from .errors import BackendMalformedReply, BackendUnavailable
from .util import derive_seed

ROLES = ("paraphrase", "txt2img", "embed_text", "embed_image", "detect", "iqa")

# prompts containing this token are flagged NSFW by the mock safety checker
NSFW_SENTINEL = "nsfwsentinel"

MOCK_EMBED_DIM = 64
MOCK_IMAGE_SIZE = 32
MOCK_LABELS = (
    "person", "dog", "cat", "car", "bicycle", "kitchen", "pizza", "table",
    "keyboard", "street", "toilet", "sink", "stove", "traffic light", "boy",
)


class MockBackend:
    """Deterministic stand-in for every backend role.

    Images are procedural noise patterns derived from hash(prompt, seed);
    the NSFW flag fires when the prompt contains the sentinel token, so the
    safety-retry path is testable without a model.
    """

    deterministic = True
    roles = ROLES

    def paraphrase(self, text: str, k: int, seed: int) -> list[str]:
        out = []
        words = text.split()
        for i in range(k):
            rng = random.Random(derive_seed("paraphrase", text, seed, i))
            shuffled = words[:]
            rng.shuffle(shuffled)
            out.append(" ".join(shuffled))
        return out

    def txt2img(self, caption: str, seed: int) -> tuple[bytes, bool]:
        rng = np.random.default_rng(derive_seed("txt2img", caption, seed))
        pixels = rng.integers(0, 256, size=(MOCK_IMAGE_SIZE, MOCK_IMAGE_SIZE, 3), dtype=np.uint8)
        buf = io.BytesIO()
        Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
        nsfw = NSFW_SENTINEL in caption.lower()
        return buf.getvalue(), nsfw

    def _unit_vector(self, *key_parts) -> list[float]:
        rng = np.random.default_rng(derive_seed(*key_parts))
        v = rng.standard_normal(MOCK_EMBED_DIM)
        return (v / np.linalg.norm(v)).tolist()

    def embed_text(self, texts: list[str]) -> list[list[float]]:
        return [self._unit_vector("embed_text", t) for t in texts]

    def embed_image(self, image_png: bytes) -> list[float]:
        digest = hashlib.blake2b(image_png, digest_size=8).hexdigest()
        return self._unit_vector("embed_image", digest)

    def detect(self, image_png: bytes) -> list[str]:
        rng = random.Random(derive_seed("detect", hashlib.blake2b(image_png).hexdigest()))
        n = rng.randint(1, 3)
        return rng.sample(list(MOCK_LABELS), n)

    def iqa(self, image_png: bytes) -> float:
        rng = random.Random(derive_seed("iqa", hashlib.blake2b(image_png).hexdigest()))
        return round(rng.uniform(20.0, 90.0), 4)


class HttpBackend:
    """Client for one backend base URL speaking the shared wire protocol."""

    def __init__(self, base_url: str, timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()

    def _post(self, route: str, payload: dict) -> dict:
        try:
            resp = self._session.post(
                self.base_url + route, json=payload, timeout=self.timeout
            )
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise BackendUnavailable(f"{self.base_url}{route}: {exc}") from exc
        try:
            return resp.json()
        except json.JSONDecodeError as exc:
            raise BackendMalformedReply(f"{self.base_url}{route}: non-JSON reply") from exc

    @staticmethod
    def _field(reply: dict, key: str, route: str):
        if key not in reply:
            raise BackendMalformedReply(f"{route}: reply missing {key!r}")
        return reply[key]

    def paraphrase(self, text: str, k: int, seed: int) -> list[str]:
        reply = self._post("/paraphrase", {"text": text, "k": k, "seed": seed})
        paras = self._field(reply, "paraphrases", "/paraphrase")
        if not isinstance(paras, list) or not all(isinstance(p, str) for p in paras):
            raise BackendMalformedReply("/paraphrase: 'paraphrases' is not a list of strings")
        return paras

    def txt2img(self, caption: str, seed: int) -> tuple[bytes, bool]:
        reply = self._post("/txt2img", {"caption": caption, "seed": seed})
        b64 = self._field(reply, "image_png_base64", "/txt2img")
        nsfw = bool(self._field(reply, "nsfw", "/txt2img"))
        try:
            return base64.b64decode(b64), nsfw
        except (TypeError, ValueError) as exc:
            raise BackendMalformedReply("/txt2img: bad base64 image payload") from exc

    def embed_text(self, texts: list[str]) -> list[list[float]]:
        reply = self._post("/embed/text", {"texts": texts})
        vectors = self._field(reply, "vectors", "/embed/text")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise BackendMalformedReply("/embed/text: vector count mismatch")
        return vectors

    def embed_image(self, image_png: bytes) -> list[float]:
        payload = {"image_png_base64": base64.b64encode(image_png).decode("ascii")}
        return self._field(self._post("/embed/image", payload), "vector", "/embed/image")

    def detect(self, image_png: bytes) -> list[str]:
        payload = {"image_png_base64": base64.b64encode(image_png).decode("ascii")}
        return self._field(self._post("/detect", payload), "labels", "/detect")

    def iqa(self, image_png: bytes) -> float:
        payload = {"image_png_base64": base64.b64encode(image_png).decode("ascii")}
        return float(self._field(self._post("/iqa", payload), "musiq", "/iqa"))


_shared_mock = MockBackend()


def make_backend(url: str):
    """Resolve a backend URL; the special value "mock" gives the in-process mock."""
    if url == "mock":
        return _shared_mock
    return HttpBackend(url)


class BackendPool:
    """Per-role backend handles, built from a role -> URL map."""

    def __init__(self, urls: dict | None = None, default: str = "mock"):
        urls = urls or {}
        cache = {}

        def resolve(url):
            if url not in cache:
                cache[url] = make_backend(url)
            return cache[url]

        self._by_role = {role: resolve(urls.get(role, default)) for role in ROLES}

    def __getitem__(self, role: str):
        return self._by_role[role]

    def paraphrase(self, text, k, seed):
        return self._by_role["paraphrase"].paraphrase(text, k, seed)

    def txt2img(self, caption, seed):
        return self._by_role["txt2img"].txt2img(caption, seed)

    def embed_text(self, texts):
        return self._by_role["embed_text"].embed_text(texts)

    def embed_image(self, image_png):
        return self._by_role["embed_image"].embed_image(image_png)

    def detect(self, image_png):
        return self._by_role["detect"].detect(image_png)

    def iqa(self, image_png):
        return self._by_role["iqa"].iqa(image_png)
