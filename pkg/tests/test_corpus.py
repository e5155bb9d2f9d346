import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capaug import corpus as cp
from capaug.errors import MalformedAnnotation, MissingCaptions, UnknownSplit

from conftest import make_corpus, random_corpus, write_annotations


class TestLoadAnnotations:
    def test_minimal_file(self, tiny_annotations):
        c = cp.load_annotations(tiny_annotations, "all")
        assert len(c) == 1
        assert c.caption_count() == 2
        assert c.examples[0].image_id == 1
        assert [cap.caption_id for cap in c.examples[0].captions] == [10, 11]

    def test_missing_captions(self, tmp_path):
        path = write_annotations(
            tmp_path / "ann.json",
            images=[{"id": 1, "file_name": "a.jpg"}, {"id": 2, "file_name": "b.jpg"}],
            annotations=[{"id": 10, "image_id": 1, "caption": "a dog"}],
        )
        with pytest.raises(MissingCaptions):
            cp.load_annotations(path, "all")

    def test_unknown_split(self, tiny_annotations):
        with pytest.raises(UnknownSplit):
            cp.load_annotations(tiny_annotations, "restval")

    def test_split_selection(self, tmp_path):
        path = write_annotations(
            tmp_path / "ann.json",
            images=[{"id": 1, "file_name": "a.jpg"}, {"id": 2, "file_name": "b.jpg"}],
            annotations=[
                {"id": 10, "image_id": 1, "caption": "a dog"},
                {"id": 11, "image_id": 2, "caption": "a cat"},
            ],
        )
        split_file = tmp_path / "split.json"
        split_file.write_text(json.dumps({"1": "train", "2": "val"}))
        train = cp.load_annotations(path, "train", split_file)
        assert [ex.image_id for ex in train] == [1]
        assert train.split_name == "train"

    def test_split_requires_split_file(self, tiny_annotations):
        with pytest.raises(UnknownSplit):
            cp.load_annotations(tiny_annotations, "train")

    def test_schema_violations(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"images": []}))
        with pytest.raises(MalformedAnnotation):
            cp.load_annotations(bad, "all")
        bad.write_text("not json")
        with pytest.raises(MalformedAnnotation):
            cp.load_annotations(bad, "all")

    def test_annotation_for_unknown_image(self, tmp_path):
        path = write_annotations(
            tmp_path / "ann.json",
            images=[{"id": 1, "file_name": "a.jpg"}],
            annotations=[{"id": 10, "image_id": 7, "caption": "a dog"}],
        )
        with pytest.raises(MalformedAnnotation):
            cp.load_annotations(path, "all")


class TestCorpusInvariants:
    def test_ordering_by_image_id(self):
        c = cp.Corpus(
            examples=[
                cp.ExampleRecord(3, (cp.CaptionRecord(30, "x y"),)),
                cp.ExampleRecord(1, (cp.CaptionRecord(10, "x y"),)),
            ]
        )
        assert [ex.image_id for ex in c] == [1, 3]

    def test_duplicate_image_id_rejected(self):
        with pytest.raises(MalformedAnnotation):
            cp.Corpus(
                examples=[
                    cp.ExampleRecord(1, (cp.CaptionRecord(10, "x"),)),
                    cp.ExampleRecord(1, (cp.CaptionRecord(11, "y"),)),
                ]
            )

    def test_empty_caption_text_rejected(self):
        with pytest.raises(MalformedAnnotation):
            cp.CaptionRecord(1, "   ")

    def test_paraphrase_needs_valid_parent(self):
        with pytest.raises(MalformedAnnotation):
            cp.CaptionRecord(1, "x", origin="paraphrase")
        with pytest.raises(MalformedAnnotation):
            cp.Corpus(
                examples=[
                    cp.ExampleRecord(
                        1,
                        (
                            cp.CaptionRecord(10, "x y"),
                            cp.CaptionRecord(11, "y x", "paraphrase", parent_caption_id=99),
                        ),
                    )
                ]
            )


class TestVocabulary:
    def test_threshold_boundary(self):
        caps = tuple(cp.CaptionRecord(i, "cat jumps") for i in range(5))
        c = cp.Corpus(examples=[cp.ExampleRecord(1, caps)])
        vocab = cp.build_vocabulary(c, min_count=5)
        assert "cat" in vocab
        assert "jumps" in vocab
        vocab6 = cp.build_vocabulary(c, min_count=6)
        assert "cat" not in vocab6

    def test_empty_corpus(self):
        assert len(cp.build_vocabulary(cp.Corpus(examples=[]), 5)) == 0

    def test_monotonicity_random(self, rng):
        for _ in range(50):
            c = random_corpus(rng)
            a, b = sorted(rng.sample(range(1, 6), 2))
            va = set(cp.build_vocabulary(c, a).tokens)
            vb = set(cp.build_vocabulary(c, b).tokens)
            assert vb <= va


class TestStats:
    def test_tiny(self):
        c = make_corpus([2])
        s = cp.corpus_stats(c, 1)
        assert (s.image_count, s.caption_count) == (1, 2)

    def test_caption_sum_matches_enumeration(self, rng):
        for _ in range(100):
            c = random_corpus(rng)
            s = cp.corpus_stats(c, 5)
            assert s.caption_count == sum(len(ex.captions) for ex in c)
            assert s.image_count == len(c.examples)

    def test_determinism(self, rng):
        c = random_corpus(rng)
        assert cp.corpus_stats(c, 5) == cp.corpus_stats(c, 5)


class TestSampleExamples:
    def test_full_and_empty(self):
        c = make_corpus([1, 2, 3])
        s, r = cp.sample_examples(c, 100, seed=1)
        assert len(s) == 3 and len(r) == 0
        s, r = cp.sample_examples(c, 0, seed=1)
        assert len(s) == 0 and len(r) == 3

    def test_floor_and_reproducibility(self):
        c = make_corpus([1] * 10)
        s1, _ = cp.sample_examples(c, 10, seed=42)
        s2, _ = cp.sample_examples(c, 10, seed=42)
        assert len(s1) == 1
        assert [e.image_id for e in s1] == [e.image_id for e in s2]

    @settings(max_examples=200, deadline=None)
    @given(
        st.integers(1, 30),
        st.floats(0, 100, allow_nan=False),
        st.integers(0, 2**64 - 1),
    )
    def test_partition_property(self, n, fraction, seed):
        c = make_corpus([1] * n)
        s, r = cp.sample_examples(c, fraction, seed)
        assert len(s) == int(fraction / 100 * n)
        assert len(s) + len(r) == n
        ids_s = {e.image_id for e in s}
        ids_r = {e.image_id for e in r}
        assert not ids_s & ids_r
        assert ids_s | ids_r == {e.image_id for e in c}

    def test_nested_for_equal_seed(self):
        c = make_corpus([1] * 50)
        prev = set()
        for frac in (10, 20, 30, 40, 50):
            s, _ = cp.sample_examples(c, frac, seed=7)
            ids = {e.image_id for e in s}
            assert prev <= ids
            prev = ids


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        c = random_corpus(rng)
        p1 = tmp_path / "c1.jsonl"
        p2 = tmp_path / "c2.jsonl"
        cp.save_corpus(c, p1)
        loaded = cp.load_corpus(p1)
        cp.save_corpus(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert loaded.split_name == c.split_name
        assert [e.image_id for e in loaded] == [e.image_id for e in c]

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "x.jsonl"
        path.write_text('{"format":"something-else"}\n')
        with pytest.raises(MalformedAnnotation):
            cp.load_corpus(path)
