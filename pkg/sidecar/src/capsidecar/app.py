"""FastAPI application serving the wire protocol.

Routes (all bodies UTF-8 JSON; images base64-encoded PNG):
  POST /paraphrase   {text, k, seed}        -> {paraphrases: [str]}
  POST /txt2img      {caption, seed}        -> {image_png_base64, nsfw}
  POST /embed/text   {texts: [str]}         -> {vectors: [[float]]}
  POST /embed/image  {image_png_base64}     -> {vector: [float]}
  POST /detect       {image_png_base64}     -> {labels: [str]}
  POST /iqa          {image_png_base64}     -> {musiq: float}
  GET  /health       -> {roles, models, deterministic, nsfw_sentinel}

The service is stateless per request. A bounded semaphore per role caps
how many requests run a given model at once (queue_depth in the
registry); everything past that waits in line.
"""

import base64
import binascii
import threading

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .registry import ROLES, EndpointRegistry


class ParaphraseRequest(BaseModel):
    text: str
    k: int = Field(ge=1, le=100)
    seed: int


class Txt2ImgRequest(BaseModel):
    caption: str
    seed: int


class EmbedTextRequest(BaseModel):
    texts: list[str]


class ImageRequest(BaseModel):
    image_png_base64: str

    def decode(self) -> bytes:
        try:
            return base64.b64decode(self.image_png_base64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"bad base64 image: {exc}")


def create_app(registry: EndpointRegistry | None = None) -> FastAPI:
    registry = registry or EndpointRegistry()
    impls = registry.load()
    gates = {role: threading.BoundedSemaphore(registry.queue_depth) for role in impls}
    app = FastAPI(title="capsidecar", version="0.1.0")

    def backend(role: str):
        if role not in impls:
            raise HTTPException(status_code=404, detail=f"role {role!r} not served here")
        return impls[role]

    @app.get("/health")
    def health():
        served = registry.roles
        return {
            "roles": served,
            "models": {role: registry.models[role] for role in served},
            "deterministic": all(
                getattr(impls[r], "deterministic", False) for r in served
            ),
            "nsfw_sentinel": getattr(impls.get("txt2img"), "nsfw_sentinel", None),
        }

    @app.post("/paraphrase")
    def paraphrase(req: ParaphraseRequest):
        b = backend("paraphrase")
        with gates["paraphrase"]:
            return {"paraphrases": b.paraphrase(req.text, req.k, req.seed)}

    @app.post("/txt2img")
    def txt2img(req: Txt2ImgRequest):
        b = backend("txt2img")
        with gates["txt2img"]:
            png, nsfw = b.txt2img(req.caption, req.seed)
        return {
            "image_png_base64": base64.b64encode(png).decode("ascii"),
            "nsfw": bool(nsfw),
        }

    @app.post("/embed/text")
    def embed_text(req: EmbedTextRequest):
        b = backend("embed_text")
        with gates["embed_text"]:
            return {"vectors": b.embed_text(req.texts)}

    @app.post("/embed/image")
    def embed_image(req: ImageRequest):
        b = backend("embed_image")
        png = req.decode()
        with gates["embed_image"]:
            return {"vector": b.embed_image(png)}

    @app.post("/detect")
    def detect(req: ImageRequest):
        b = backend("detect")
        png = req.decode()
        with gates["detect"]:
            return {"labels": b.detect(png)}

    @app.post("/iqa")
    def iqa(req: ImageRequest):
        b = backend("iqa")
        png = req.decode()
        with gates["iqa"]:
            return {"musiq": float(b.iqa(png))}

    return app


def builtin_app() -> FastAPI:
    """App serving every role with the builtin models (uvicorn factory)."""
    return create_app(EndpointRegistry(models={r: "builtin" for r in ROLES}))
