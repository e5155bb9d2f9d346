"""Deterministic pixel transforms: horizontal flip and seeded perspective warp.

The warp displaces each corner toward the image interior by independent
uniform offsets bounded by distortion_scale * (width/2, height/2), then
resamples bilinearly under the homography that maps the displaced corners
back to the original ones. Out-of-source samples are black.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .corpus import Corpus, ExampleRecord
from .errors import DegenerateHomography, ImageReadError, ImageWriteError
from .util import derive_seed

MAX_HOMOGRAPHY_TRIES = 8


@dataclass
class ImageBuffer:
    pixels: np.ndarray  # (height, width, 3) uint8, row-major RGB

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) pixels, got {self.pixels.shape}")
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {self.pixels.dtype}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @classmethod
    def from_file(cls, path) -> "ImageBuffer":
        try:
            with Image.open(path) as im:
                return cls(np.asarray(im.convert("RGB")))
        except (OSError, ValueError) as exc:
            raise ImageReadError(f"{path}: {exc}") from exc

    def to_file(self, path) -> None:
        try:
            Image.fromarray(self.pixels, mode="RGB").save(path, format="PNG")
        except OSError as exc:
            raise ImageWriteError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class AugmentPolicy:
    p_flip: float = 0.5
    p_perspective: float = 0.5
    distortion_scale: float = 0.5
    seed: int = 42

    def __post_init__(self):
        for name in ("p_flip", "p_perspective", "distortion_scale"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def flip_horizontal(image: ImageBuffer) -> ImageBuffer:
    return ImageBuffer(image.pixels[:, ::-1].copy())


def homography_from_points(src, dst) -> np.ndarray:
    """3x3 homography H with H(src_i) ~ dst_i for four point pairs.

    Solves the standard 8-unknown linear system (h33 fixed to 1).
    Raises DegenerateHomography when the system is singular.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    a = []
    b = []
    for (x, y), (u, v) in zip(src, dst):
        a.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        a.append([0, 0, 0, x, y, 1, -v * x, -v * y])
        b.extend([u, v])
    a = np.array(a)
    try:
        h = np.linalg.solve(a, np.array(b))
    except np.linalg.LinAlgError as exc:
        raise DegenerateHomography(str(exc)) from exc
    if not np.all(np.isfinite(h)):
        raise DegenerateHomography("non-finite homography solution")
    return np.append(h, 1.0).reshape(3, 3)


def _displaced_corners(width, height, distortion_scale, rng):
    half_w = distortion_scale * width / 2.0
    half_h = distortion_scale * height / 2.0
    corners = np.array(
        [[0, 0], [width - 1, 0], [width - 1, height - 1], [0, height - 1]], dtype=float
    )
    signs = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
    offsets = np.column_stack(
        [rng.uniform(0, half_w, size=4), rng.uniform(0, half_h, size=4)]
    )
    return corners, corners + signs * offsets


def _bilinear_sample(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = pixels.shape[:2]
    valid = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    x0 = np.clip(np.floor(xs), 0, w - 1).astype(int)
    y0 = np.clip(np.floor(ys), 0, h - 1).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (np.clip(xs, 0, w - 1) - x0)[..., None]
    fy = (np.clip(ys, 0, h - 1) - y0)[..., None]
    img = pixels.astype(float)
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    out = top * (1 - fy) + bot * fy
    out[~valid] = 0.0
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def perspective_warp(image: ImageBuffer, distortion_scale: float, rng) -> ImageBuffer:
    """Seeded perspective distortion; distortion_scale=0 is a bit-exact identity."""
    if not 0.0 <= distortion_scale <= 1.0:
        raise ValueError(f"distortion_scale must be in [0, 1], got {distortion_scale}")
    h, w = image.height, image.width
    last_exc = None
    for _ in range(MAX_HOMOGRAPHY_TRIES):
        original, displaced = _displaced_corners(w, h, distortion_scale, rng)
        if np.array_equal(original, displaced):
            return ImageBuffer(image.pixels.copy())
        try:
            # maps output coords to input sampling coords: the displaced
            # quad ends up holding the squeezed source image
            hom = homography_from_points(displaced, original)
        except DegenerateHomography as exc:
            last_exc = exc
            continue
        xs, ys = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
        denom = hom[2, 0] * xs + hom[2, 1] * ys + hom[2, 2]
        sample_x = (hom[0, 0] * xs + hom[0, 1] * ys + hom[0, 2]) / denom
        sample_y = (hom[1, 0] * xs + hom[1, 1] * ys + hom[1, 2]) / denom
        return ImageBuffer(_bilinear_sample(image.pixels, sample_x, sample_y))
    raise DegenerateHomography(
        f"no valid homography after {MAX_HOMOGRAPHY_TRIES} tries"
    ) from last_exc


def stochastic_augment(image: ImageBuffer, policy: AugmentPolicy, rng) -> ImageBuffer:
    """Flip then warp, each gated by its own coin; coin order is fixed."""
    do_flip = rng.random() < policy.p_flip
    do_persp = rng.random() < policy.p_perspective
    out = flip_horizontal(image) if do_flip else image
    if do_persp:
        out = perspective_warp(out, policy.distortion_scale, rng)
    elif out is image:
        out = ImageBuffer(image.pixels.copy())
    return out


def build_coco_image(corpus: Corpus, policy: AugmentPolicy, image_root_out) -> Corpus:
    """Write one augmented copy per example; captions are untouched.

    Each image gets its own RNG derived from (policy.seed, image_id), so
    the output is schedule-independent if processing is ever parallelized.
    """
    root = Path(image_root_out)
    root.mkdir(parents=True, exist_ok=True)
    examples = []
    for ex in corpus.examples:
        if ex.image_path is None:
            raise ImageReadError(f"image {ex.image_id} has no image_path")
        rng = np.random.default_rng(derive_seed(policy.seed, ex.image_id))
        out = stochastic_augment(ImageBuffer.from_file(ex.image_path), policy, rng)
        out_path = root / f"{ex.image_id}_aug.png"
        out.to_file(out_path)
        examples.append(
            ExampleRecord(image_id=ex.image_id, captions=ex.captions, image_path=str(out_path))
        )
    return Corpus(examples=examples, split_name=corpus.split_name)
