"""Wire-protocol conformance checker.

contract_check() exercises every role a running service claims to serve
(per /health) with fixture payloads and validates reply schemas, seeded
determinism when the service declares deterministic=true, and the
NSFW-flag plumbing when a safety sentinel is declared. Each check
produces one pass/fail entry; nothing short-circuits, so a broken
endpoint still lets the rest of the report fill in.
"""

import base64
import io
from dataclasses import dataclass, field

import httpx
from PIL import Image

KNOWN_ROLES = ("paraphrase", "txt2img", "embed_text", "embed_image", "detect", "iqa")

FIXTURE_TEXT = "a brown dog sleeping on a red couch"
FIXTURE_CAPTION = "a cat sitting on a windowsill"


@dataclass
class Check:
    endpoint: str
    ok: bool
    detail: str = ""


@dataclass
class ConformanceReport:
    base_url: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.ok for c in self.checks)

    def add(self, endpoint: str, ok: bool, detail: str = ""):
        self.checks.append(Check(endpoint, ok, detail))

    def format(self) -> str:
        lines = [f"conformance report for {self.base_url}"]
        for c in self.checks:
            mark = "ok  " if c.ok else "FAIL"
            lines.append(f"  [{mark}] {c.endpoint}" + (f": {c.detail}" if c.detail else ""))
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _is_vector(v) -> bool:
    return (
        isinstance(v, list)
        and len(v) > 0
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
    )


def _fixture_png() -> bytes:
    img = Image.new("RGB", (32, 32), (40, 90, 160))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _png_b64() -> str:
    return base64.b64encode(_fixture_png()).decode("ascii")


def contract_check(base_url: str, client: httpx.Client | None = None) -> ConformanceReport:
    """Probe a running sidecar; returns a per-endpoint conformance report.

    `client` may be supplied for in-process testing (e.g. an httpx client
    over an ASGI transport); by default a real HTTP client is used.
    """
    report = ConformanceReport(base_url=base_url)
    own_client = client is None
    if own_client:
        client = httpx.Client(base_url=base_url, timeout=60.0)
    try:
        _run_checks(client, report)
    finally:
        if own_client:
            client.close()
    return report


def _post(client, report, route, payload):
    """POST returning the JSON body, or None after recording the failure."""
    try:
        resp = client.post(route, json=payload)
    except httpx.HTTPError as exc:
        report.add(route, False, f"transport error: {exc}")
        return None
    if resp.status_code != 200:
        report.add(route, False, f"status {resp.status_code}: {resp.text[:200]}")
        return None
    try:
        return resp.json()
    except ValueError:
        report.add(route, False, "non-JSON reply")
        return None


def _run_checks(client: httpx.Client, report: ConformanceReport):
    try:
        health = client.get("/health")
    except httpx.HTTPError as exc:
        report.add("/health", False, f"unreachable: {exc}")
        return
    if health.status_code != 200:
        report.add("/health", False, f"status {health.status_code}")
        return
    body = health.json()
    roles = body.get("roles")
    if not isinstance(roles, list) or not set(roles) <= set(KNOWN_ROLES):
        report.add("/health", False, f"bad roles field: {roles!r}")
        return
    if not isinstance(body.get("models"), dict) or set(body["models"]) != set(roles):
        report.add("/health", False, "models field does not cover served roles")
        return
    report.add("/health", True, f"roles={','.join(roles)}")
    deterministic = bool(body.get("deterministic"))
    sentinel = body.get("nsfw_sentinel")

    if "paraphrase" in roles:
        _check_paraphrase(client, report, deterministic)

    embed_dim = None
    if "embed_text" in roles:
        embed_dim = _check_embed_text(client, report)
    if "embed_image" in roles:
        _check_embed_image(client, report, embed_dim)
    if "txt2img" in roles:
        _check_txt2img(client, report, deterministic, sentinel)
    if "detect" in roles:
        _check_detect(client, report)
    if "iqa" in roles:
        _check_iqa(client, report)


def _check_paraphrase(client, report, deterministic):
    payload = {"text": FIXTURE_TEXT, "k": 3, "seed": 7}
    body = _post(client, report, "/paraphrase", payload)
    if body is None:
        return
    paras = body.get("paraphrases")
    if not isinstance(paras, list) or not all(isinstance(p, str) for p in paras):
        report.add("/paraphrase", False, "paraphrases is not a list of strings")
        return
    report.add("/paraphrase", True, f"{len(paras)} paraphrases")
    if deterministic:
        again = _post(client, report, "/paraphrase", payload)
        if again is not None:
            same = again.get("paraphrases") == paras
            report.add("/paraphrase determinism", same,
                       "" if same else "seeded replies differ")


def _check_txt2img(client, report, deterministic, sentinel):
    payload = {"caption": FIXTURE_CAPTION, "seed": 1}
    body = _post(client, report, "/txt2img", payload)
    if body is None:
        return
    b64 = body.get("image_png_base64")
    if not isinstance(b64, str) or not isinstance(body.get("nsfw"), bool):
        report.add("/txt2img", False, "missing image_png_base64 / nsfw fields")
        return
    try:
        png = base64.b64decode(b64, validate=True)
        with Image.open(io.BytesIO(png)) as img:
            ok_png = img.format == "PNG"
    except Exception as exc:  # noqa: BLE001 - any decode failure is the finding
        report.add("/txt2img", False, f"image does not decode: {exc}")
        return
    report.add("/txt2img", ok_png, "" if ok_png else "payload is not PNG")
    if deterministic:
        again = _post(client, report, "/txt2img", payload)
        if again is not None:
            same = again.get("image_png_base64") == b64
            report.add("/txt2img determinism", same,
                       "" if same else "seeded images differ")
    if sentinel:
        flagged = _post(client, report, "/txt2img",
                        {"caption": f"a photo of {sentinel}", "seed": 1})
        if flagged is not None:
            ok = flagged.get("nsfw") is True
            report.add("/txt2img nsfw flag", ok,
                       "" if ok else "sentinel prompt not flagged")


def _check_embed_text(client, report):
    body = _post(client, report, "/embed/text",
                 {"texts": [FIXTURE_TEXT, FIXTURE_CAPTION]})
    if body is None:
        return None
    vectors = body.get("vectors")
    ok = (
        isinstance(vectors, list)
        and len(vectors) == 2
        and all(_is_vector(v) for v in vectors)
        and len(vectors[0]) == len(vectors[1])
    )
    report.add("/embed/text", ok,
               f"dim={len(vectors[0])}" if ok else "expected 2 equal-length vectors")
    return len(vectors[0]) if ok else None


def _check_embed_image(client, report, embed_dim):
    body = _post(client, report, "/embed/image", {"image_png_base64": _png_b64()})
    if body is None:
        return
    vector = body.get("vector")
    if not _is_vector(vector):
        report.add("/embed/image", False, "vector is not a list of numbers")
        return
    if embed_dim is not None and len(vector) != embed_dim:
        report.add("/embed/image", False,
                   f"dim {len(vector)} != text embedding dim {embed_dim}")
        return
    report.add("/embed/image", True, f"dim={len(vector)}")


def _check_detect(client, report):
    body = _post(client, report, "/detect", {"image_png_base64": _png_b64()})
    if body is None:
        return
    labels = body.get("labels")
    ok = isinstance(labels, list) and all(isinstance(x, str) for x in labels)
    report.add("/detect", ok, "" if ok else "labels is not a list of strings")


def _check_iqa(client, report):
    body = _post(client, report, "/iqa", {"image_png_base64": _png_b64()})
    if body is None:
        return
    musiq = body.get("musiq")
    ok = isinstance(musiq, (int, float)) and not isinstance(musiq, bool)
    report.add("/iqa", ok, "" if ok else "musiq is not a number")
