import numpy as np
import pytest

from capaug import imageaug as ia
from capaug.corpus import CaptionRecord, Corpus, ExampleRecord
from capaug.errors import ImageReadError

import oracles
from conftest import random_image, write_png


def buf(pixels) -> ia.ImageBuffer:
    return ia.ImageBuffer(np.asarray(pixels, dtype=np.uint8))


class TestFlip:
    def test_1x2(self):
        img = buf([[[1, 1, 1], [2, 2, 2]]])
        flipped = ia.flip_horizontal(img)
        assert flipped.pixels[0, 0, 0] == 2
        assert flipped.pixels[0, 1, 0] == 1

    def test_involution(self):
        img = buf(random_image(3))
        twice = ia.flip_horizontal(ia.flip_horizontal(img))
        assert np.array_equal(twice.pixels, img.pixels)

    def test_1x1(self):
        img = buf([[[7, 8, 9]]])
        assert np.array_equal(ia.flip_horizontal(img).pixels, img.pixels)

    def test_pixel_mapping(self):
        img = buf(random_image(4, size=8))
        flipped = ia.flip_horizontal(img)
        for x in range(8):
            assert np.array_equal(flipped.pixels[:, x], img.pixels[:, 8 - 1 - x])


class TestPerspectiveWarp:
    def test_zero_scale_identity_bit_exact(self):
        img = buf(random_image(5, size=20))
        rng = np.random.default_rng(0)
        out = ia.perspective_warp(img, 0.0, rng)
        assert np.array_equal(out.pixels, img.pixels)

    def test_determinism(self):
        img = buf(random_image(6, size=24))
        out1 = ia.perspective_warp(img, 0.5, np.random.default_rng(99))
        out2 = ia.perspective_warp(img, 0.5, np.random.default_rng(99))
        assert np.array_equal(out1.pixels, out2.pixels)

    def test_dimensions_preserved(self):
        img = buf(random_image(7, size=17))
        out = ia.perspective_warp(img, 0.8, np.random.default_rng(1))
        assert out.pixels.shape == img.pixels.shape

    def test_corner_displacement_bounds(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            original, displaced = ia._displaced_corners(100, 100, 0.5, rng)
            delta = np.abs(displaced - original)
            assert np.all(delta <= 25.0 + 1e-12)
            # displacement points toward the interior
            assert np.all(displaced[:, 0] >= -1e-12) and np.all(displaced[:, 0] <= 99)
            assert np.all(displaced[:, 1] >= -1e-12) and np.all(displaced[:, 1] <= 99)

    def test_homography_matches_svd_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            original, displaced = ia._displaced_corners(100, 80, 0.5, rng)
            h_lib = ia.homography_from_points(displaced, original)
            h_oracle = oracles.homography_oracle(displaced, original)
            probe = np.column_stack(
                [rng.uniform(0, 99, size=20), rng.uniform(0, 79, size=20)]
            )
            p_lib = oracles.project(h_lib, probe)
            p_oracle = oracles.project(h_oracle, probe)
            assert np.allclose(p_lib, p_oracle, atol=1e-6)
            # corner constraint satisfied exactly up to float error
            assert np.allclose(oracles.project(h_lib, displaced), original, atol=1e-6)


class TestStochasticAugment:
    def test_all_off_is_identity(self):
        img = buf(random_image(8))
        policy = ia.AugmentPolicy(p_flip=0.0, p_perspective=0.0)
        out = ia.stochastic_augment(img, policy, np.random.default_rng(0))
        assert np.array_equal(out.pixels, img.pixels)

    def test_flip_only(self):
        img = buf(random_image(9))
        policy = ia.AugmentPolicy(p_flip=1.0, p_perspective=0.0)
        out = ia.stochastic_augment(img, policy, np.random.default_rng(0))
        assert np.array_equal(out.pixels, ia.flip_horizontal(img).pixels)

    def test_binomial_flip_rate(self):
        # same coin stream as stochastic_augment draws, just without the pixels
        policy = ia.AugmentPolicy()
        flips = 0
        for seed in range(10_000):
            rng = np.random.default_rng(seed)
            if rng.random() < policy.p_flip:
                flips += 1
            rng.random()  # perspective coin
        assert abs(flips - 5000) <= 150

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            ia.AugmentPolicy(p_flip=1.5)


class TestBuildCocoImage:
    def _corpus(self, tmp_path, n=3):
        examples = []
        for i in range(n):
            path = write_png(tmp_path / f"img{i}.png", random_image(100 + i))
            examples.append(
                ExampleRecord(
                    image_id=i,
                    captions=(CaptionRecord(caption_id=i, text=f"caption {i} words"),),
                    image_path=str(path),
                )
            )
        return Corpus(examples=examples)

    def test_p_zero_round_trips_bytes(self, tmp_path):
        c = self._corpus(tmp_path, n=2)
        policy = ia.AugmentPolicy(p_flip=0.0, p_perspective=0.0, seed=1)
        out = ia.build_coco_image(c, policy, tmp_path / "aug")
        for before, after in zip(c.examples, out.examples):
            a = ia.ImageBuffer.from_file(before.image_path)
            b = ia.ImageBuffer.from_file(after.image_path)
            assert np.array_equal(a.pixels, b.pixels)

    def test_counts_and_paths(self, tmp_path):
        c = self._corpus(tmp_path, n=3)
        out = ia.build_coco_image(c, ia.AugmentPolicy(seed=2), tmp_path / "aug")
        assert len(out) == 3
        assert out.caption_count() == c.caption_count()
        for ex in out:
            assert ex.image_path.endswith(f"{ex.image_id}_aug.png")

    def test_deterministic_output_bytes(self, tmp_path):
        c = self._corpus(tmp_path, n=3)
        out1 = ia.build_coco_image(c, ia.AugmentPolicy(seed=3), tmp_path / "aug1")
        out2 = ia.build_coco_image(c, ia.AugmentPolicy(seed=3), tmp_path / "aug2")
        for e1, e2 in zip(out1.examples, out2.examples):
            b1 = open(e1.image_path, "rb").read()
            b2 = open(e2.image_path, "rb").read()
            assert b1 == b2

    def test_missing_image_path(self, tmp_path):
        c = Corpus(
            examples=[ExampleRecord(1, (CaptionRecord(1, "some words"),), image_path=None)]
        )
        with pytest.raises(ImageReadError):
            ia.build_coco_image(c, ia.AugmentPolicy(), tmp_path / "aug")
