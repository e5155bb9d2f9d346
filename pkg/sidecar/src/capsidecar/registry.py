"""Deployment configuration: which roles are served and by which models.

A role implementation is any object exposing the method for that role
(paraphrase / txt2img / embed_text / embed_image / detect / iqa). The
model identifier "builtin" maps to the deterministic reference
implementations in builtin.py; anything of the form
"some.module:factory" is imported and called with (role, device), which
is how real checkpoints (a latent-diffusion generator, a contrastive
image-text embedder, a detector, an IQA scorer, ...) get plugged in
without the service caring what they are.
"""

import importlib
import json
from dataclasses import dataclass, field

from . import builtin

ROLES = ("paraphrase", "txt2img", "embed_text", "embed_image", "detect", "iqa")

ROLE_METHODS = {
    "paraphrase": "paraphrase",
    "txt2img": "txt2img",
    "embed_text": "embed_text",
    "embed_image": "embed_image",
    "detect": "detect",
    "iqa": "iqa",
}


class StartupError(Exception):
    """One or more roles failed to load; carries per-role diagnostics."""

    def __init__(self, failures: dict[str, str]):
        self.failures = dict(failures)
        lines = [f"  {role}: {msg}" for role, msg in sorted(self.failures.items())]
        super().__init__("backend startup failed:\n" + "\n".join(lines))


@dataclass
class EndpointRegistry:
    """Served roles with a model identifier per role and a device descriptor."""

    models: dict[str, str] = field(
        default_factory=lambda: {role: "builtin" for role in ROLES}
    )
    device: str = "cpu"
    queue_depth: int = 8

    def __post_init__(self):
        unknown = sorted(set(self.models) - set(ROLES))
        if unknown:
            raise ValueError(f"unknown roles in registry: {unknown}")
        if not self.models:
            raise ValueError("registry serves no roles")
        if self.queue_depth < 1:
            raise ValueError("queue_depth must be >= 1")

    @property
    def roles(self) -> list[str]:
        return [r for r in ROLES if r in self.models]

    @classmethod
    def from_config(cls, path: str) -> "EndpointRegistry":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            models=raw.get("models", {role: "builtin" for role in ROLES}),
            device=raw.get("device", "cpu"),
            queue_depth=raw.get("queue_depth", 8),
        )

    def load(self) -> dict[str, object]:
        """Instantiate one implementation per served role.

        Collects all failures before raising so the operator sees every
        broken role at once, not just the first.
        """
        impls: dict[str, object] = {}
        failures: dict[str, str] = {}
        shared_builtin = builtin.BuiltinModels()
        for role in self.roles:
            model_id = self.models[role]
            try:
                if model_id == "builtin":
                    impl = shared_builtin
                elif ":" in model_id:
                    mod_name, func_name = model_id.split(":", 1)
                    factory = getattr(importlib.import_module(mod_name), func_name)
                    impl = factory(role, self.device)
                else:
                    raise ValueError(
                        f"model id {model_id!r} is neither 'builtin' nor 'module:factory'"
                    )
                if not hasattr(impl, ROLE_METHODS[role]):
                    raise TypeError(
                        f"implementation {type(impl).__name__} lacks {ROLE_METHODS[role]}()"
                    )
                impls[role] = impl
            except Exception as exc:  # noqa: BLE001 - diagnostics, re-raised below
                failures[role] = f"{type(exc).__name__}: {exc}"
        if failures:
            raise StartupError(failures)
        return impls
