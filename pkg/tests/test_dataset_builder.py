import random
import time

import pytest

from capaug import dataset_builder as db
from capaug import synthesis as syn
from capaug.backends import MockBackend
from capaug.errors import MissingGeneration
from capaug.textaug import ParaphraseSet

from conftest import make_corpus, random_corpus


def fake_genset(corpus, tmp_path=None):
    """Generation set covering every caption without touching a backend."""
    generated = [
        syn.GeneratedImage(
            image_id=c.caption_id,
            path=f"cap{c.caption_id}.png",
            source_caption_id=c.caption_id,
            attempts=1,
            backend_seed=c.caption_id,
        )
        for c in corpus.captions()
    ]
    policy = syn.GenerationPolicy(image_root="unused")
    return syn.GenerationSet(generated=generated, policy=policy)


def random_paraphrase_map(corpus, rng, max_k=5):
    pmap = {}
    for cap in corpus.captions():
        n = rng.randint(0, max_k)
        pmap[cap.caption_id] = ParaphraseSet(
            cap.caption_id,
            tuple(f"para {cap.caption_id} {i}" for i in range(n)),
            max_k,
        )
    return pmap


class TestSdBase:
    def test_five_captions_five_pairs_linked(self):
        c = make_corpus([5])
        m = db.build_sd_base(c, fake_genset(c))
        assert len(m) == 5
        for p in m.pairs:
            assert p.image_kind == "synthetic"
            assert p.image_ref_id == p.source_caption_id

    def test_single_caption(self):
        c = make_corpus([1])
        assert len(db.build_sd_base(c, fake_genset(c))) == 1

    def test_missing_generation(self):
        c = make_corpus([2])
        empty = syn.GenerationSet(generated=[], policy=syn.GenerationPolicy(image_root="x"))
        with pytest.raises(MissingGeneration):
            db.build_sd_base(c, empty)


class TestSdTrue:
    def test_five_captions_25_pairs(self):
        c = make_corpus([5])
        m = db.build_sd_true(c, fake_genset(c))
        assert len(m) == 25

    def test_single_caption_equals_base(self):
        c = make_corpus([1])
        base = db.build_sd_base(c, fake_genset(c))
        true = db.build_sd_true(c, fake_genset(c))
        assert [
            (p.image_ref_id, p.caption_text, p.source_caption_id) for p in true.pairs
        ] == [(p.image_ref_id, p.caption_text, p.source_caption_id) for p in base.pairs]

    def test_counts_2_3_4(self):
        c = make_corpus([2, 3, 4])
        assert len(db.build_sd_true(c, fake_genset(c))) == 4 + 9 + 16

    def test_includes_self_pair(self):
        c = make_corpus([3])
        m = db.build_sd_true(c, fake_genset(c))
        assert any(p.image_ref_id == p.source_caption_id for p in m.pairs)

    def test_cross_product_matches_brute_force(self):
        rng = random.Random(3)
        for _ in range(50):
            c = random_corpus(rng, max_examples=6, max_captions=4)
            m = db.build_sd_true(c, fake_genset(c))
            brute = {
                (ex.image_id, img_cap.caption_id, cap.caption_id)
                for ex in c.examples
                for img_cap in ex.captions
                for cap in ex.captions
            }
            got = {
                (p.group_image_id, p.image_ref_id, p.source_caption_id) for p in m.pairs
            }
            assert got == brute


class TestSdPara:
    def test_caption_with_4_paraphrases_appears_in_5_pairs(self):
        c = make_corpus([1])
        pmap = {0: ParaphraseSet(0, ("p1", "p2", "p3", "p4"), 5)}
        m = db.build_sd_para(c, fake_genset(c), pmap)
        assert len(m) == 5
        origins = [p.caption_origin for p in m.pairs]
        assert origins.count("human") == 1
        assert origins.count("paraphrase") == 4

    def test_empty_map_equals_base(self):
        c = make_corpus([3, 2])
        base = db.build_sd_base(c, fake_genset(c))
        para = db.build_sd_para(c, fake_genset(c), {})
        assert [
            (p.image_ref_id, p.caption_text) for p in para.pairs
        ] == [(p.image_ref_id, p.caption_text) for p in base.pairs]

    def test_counts_match_formula(self):
        rng = random.Random(4)
        for _ in range(100):
            c = random_corpus(rng, max_examples=6, max_captions=4)
            pmap = random_paraphrase_map(c, rng)
            m = db.build_sd_para(c, fake_genset(c), pmap)
            expected = sum(1 + len(pmap[x.caption_id].paraphrases) for x in c.captions())
            assert len(m) == expected


class TestConstructionArithmetic:
    def test_thousand_random_mini_corpora(self):
        rng = random.Random(42)
        start = time.monotonic()
        for _ in range(1000):
            c = random_corpus(rng, max_examples=20, max_captions=8)
            gen = fake_genset(c)
            counts = [len(ex.captions) for ex in c.examples]
            assert len(db.build_sd_base(c, gen)) == sum(counts)
            assert len(db.build_sd_true(c, gen)) == sum(x * x for x in counts)
            pmap = random_paraphrase_map(c, rng)
            expected = sum(1 + len(pmap[x.caption_id].paraphrases) for x in c.captions())
            assert len(db.build_sd_para(c, gen, pmap)) == expected
        assert time.monotonic() - start < 5.0


class TestMix:
    def test_10_of_10_examples(self):
        c = make_corpus([2] * 10)
        m = db.build_mix(c, 10, "sd_base", fake_genset(c), seed=42)
        true_groups = {p.group_image_id for p in m.pairs if p.image_kind == "true_image"}
        synth_groups = {p.group_image_id for p in m.pairs if p.image_kind == "synthetic"}
        assert len(true_groups) == 1
        assert len(synth_groups) == 9
        assert not true_groups & synth_groups
        assert m.scheme == "mix"
        assert m.mix_fraction == 10

    def test_fraction_100_pure_true(self):
        c = make_corpus([2, 3])
        m = db.build_mix(c, 100, "sd_base", fake_genset(c), seed=1)
        assert all(p.image_kind == "true_image" for p in m.pairs)
        assert len(m) == 5

    def test_fraction_0_equals_sd_true(self):
        c = make_corpus([2, 3])
        m = db.build_mix(c, 0, "sd_true", fake_genset(c), seed=1)
        ref = db.build_sd_true(c, fake_genset(c))
        assert [
            (p.image_ref_id, p.caption_text, p.group_image_id) for p in m.pairs
        ] == [(p.image_ref_id, p.caption_text, p.group_image_id) for p in ref.pairs]

    def test_partition_every_group_on_one_side(self):
        rng = random.Random(8)
        for _ in range(50):
            c = random_corpus(rng, max_examples=12, max_captions=4)
            frac = rng.choice([0, 10, 25, 50, 75, 100])
            m = db.build_mix(c, frac, "sd_base", fake_genset(c), seed=rng.randint(0, 999))
            sides = {}
            for p in m.pairs:
                sides.setdefault(p.group_image_id, set()).add(p.image_kind)
            for kinds in sides.values():
                assert len(kinds) == 1

    def test_expand_all_covers_sampled_examples_too(self):
        c = make_corpus([2] * 4)
        m = db.build_mix(c, 50, "sd_base", fake_genset(c), seed=1, expand_all=True)
        synth_groups = {p.group_image_id for p in m.pairs if p.image_kind == "synthetic"}
        assert len(synth_groups) == 4


class TestManifestStats:
    def test_sd_true_five_caption_example(self):
        c = make_corpus([5])
        s = db.manifest_stats(db.build_sd_true(c, fake_genset(c)))
        assert s.image_count == 5
        assert s.pair_count == 25

    def test_empty_manifest(self):
        m = db.PairManifest(name="x", scheme="coco", pairs=[])
        s = db.manifest_stats(m)
        assert (s.image_count, s.pair_count, s.distinct_caption_count, s.vocab_size) == (
            0, 0, 0, 0,
        )

    def test_matches_brute_force_recount(self):
        rng = random.Random(10)
        for _ in range(100):
            c = random_corpus(rng, max_examples=8, max_captions=5)
            m = db.build_sd_true(c, fake_genset(c))
            s = db.manifest_stats(m, min_count=2)
            # independent recount
            assert s.pair_count == len(m.pairs)
            assert s.image_count == len({(p.image_kind, p.image_ref_id) for p in m.pairs})
            assert s.distinct_caption_count == len({p.caption_text for p in m.pairs})
            from collections import Counter

            counts = Counter(
                tok for p in m.pairs for tok in p.caption_text.lower().split()
            )
            assert s.vocab_size == sum(1 for v in counts.values() if v >= 2)


class TestSerialization:
    def test_round_trip_byte_exact(self, tmp_path):
        rng = random.Random(12)
        c = random_corpus(rng, max_examples=6)
        m = db.build_mix(c, 25, "sd_para", fake_genset(c), random_paraphrase_map(c, rng), seed=3)
        p1, p2 = tmp_path / "m1.jsonl", tmp_path / "m2.jsonl"
        db.save_manifest(m, p1)
        db.save_manifest(db.load_manifest(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_rebuild_determinism(self, tmp_path):
        rng = random.Random(13)
        c = random_corpus(rng, max_examples=6)
        pmap = random_paraphrase_map(c, rng)
        p1, p2 = tmp_path / "m1.jsonl", tmp_path / "m2.jsonl"
        db.save_manifest(db.build_mix(c, 30, "sd_para", fake_genset(c), pmap, seed=5), p1)
        db.save_manifest(db.build_mix(c, 30, "sd_para", fake_genset(c), pmap, seed=5), p2)
        assert p1.read_bytes() == p2.read_bytes()
