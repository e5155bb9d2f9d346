"""Serve the deterministic mock backend over the wire protocol.

Lets the pipeline and the sidecar contract checker be exercised end to end
over HTTP without any model weights.
"""

import base64
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .backends import ROLES, MockBackend


def _make_handler(backend: MockBackend):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # keep test output quiet
            pass

        def _reply(self, status: int, obj: dict):
            body = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/health":
                self._reply(200, {
                    "roles": list(ROLES),
                    "models": {role: "mock" for role in ROLES},
                    "deterministic": {role: True for role in ROLES},
                })
            else:
                self._reply(404, {"error": f"unknown route {self.path}"})

        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                req = json.loads(self.rfile.read(length))
            except json.JSONDecodeError:
                self._reply(400, {"error": "invalid JSON"})
                return
            try:
                if self.path == "/paraphrase":
                    paras = backend.paraphrase(req["text"], int(req["k"]), int(req["seed"]))
                    self._reply(200, {"paraphrases": paras})
                elif self.path == "/txt2img":
                    png, nsfw = backend.txt2img(req["caption"], int(req["seed"]))
                    self._reply(200, {
                        "image_png_base64": base64.b64encode(png).decode("ascii"),
                        "nsfw": nsfw,
                    })
                elif self.path == "/embed/text":
                    self._reply(200, {"vectors": backend.embed_text(req["texts"])})
                elif self.path == "/embed/image":
                    png = base64.b64decode(req["image_png_base64"])
                    self._reply(200, {"vector": backend.embed_image(png)})
                elif self.path == "/detect":
                    png = base64.b64decode(req["image_png_base64"])
                    self._reply(200, {"labels": backend.detect(png)})
                elif self.path == "/iqa":
                    png = base64.b64decode(req["image_png_base64"])
                    self._reply(200, {"musiq": backend.iqa(png)})
                else:
                    self._reply(404, {"error": f"unknown route {self.path}"})
            except (KeyError, TypeError, ValueError) as exc:
                self._reply(400, {"error": str(exc)})

    return Handler


def make_server(port: int = 0) -> ThreadingHTTPServer:
    """Build (but do not start) the mock HTTP server; port 0 picks a free port."""
    return ThreadingHTTPServer(("127.0.0.1", port), _make_handler(MockBackend()))


def serve_forever(port: int) -> None:
    server = make_server(port)
    print(f"mock backend listening on http://127.0.0.1:{server.server_address[1]}")
    server.serve_forever()
