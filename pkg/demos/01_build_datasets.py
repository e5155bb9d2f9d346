"""Walkthrough: from raw annotations to the three synthetic dataset layouts.

Uses the in-process mock backend so everything runs in seconds with no
models. Swap `make_backend("mock")` for a real sidecar URL to do it for
real.

Run: python3 demos/01_build_datasets.py
"""

import json
import tempfile
from pathlib import Path

from capaug.backends import make_backend
from capaug.corpus import load_annotations
from capaug.dataset_builder import build_sd_base, build_sd_para, build_sd_true
from capaug.synthesis import GenerationPolicy, generate_all
from capaug.textaug import expand_corpus

work = Path(tempfile.mkdtemp(prefix="capaug_demo_"))
print(f"working in {work}\n")

# --- a tiny COCO-style annotation file: 3 images, 2-4 captions each ---
annotations = {
    "images": [{"id": i, "file_name": f"{i}.jpg"} for i in (1, 2, 3)],
    "annotations": [
        {"id": 0, "image_id": 1, "caption": "a dog chasing a ball in the park"},
        {"id": 1, "image_id": 1, "caption": "a brown dog playing on green grass"},
        {"id": 2, "image_id": 2, "caption": "a plate of pizza on a wooden table"},
        {"id": 3, "image_id": 2, "caption": "a cheese pizza next to a soda can"},
        {"id": 4, "image_id": 2, "caption": "lunch served at a small restaurant"},
        {"id": 5, "image_id": 3, "caption": "a man riding a bicycle down the street"},
        {"id": 6, "image_id": 3, "caption": "a cyclist in a yellow helmet"},
        {"id": 7, "image_id": 3, "caption": "someone biking past parked cars"},
        {"id": 8, "image_id": 3, "caption": "a bike rider on a city road"},
    ],
}
ann_path = work / "annotations.json"
ann_path.write_text(json.dumps(annotations))

corpus = load_annotations(ann_path)
counts = [len(ex.captions) for ex in corpus.examples]
print(f"corpus: {len(corpus.examples)} examples, captions per example = {counts}")

# --- one synthetic image per caption (deterministic, resumable) ---
backend = make_backend("mock")
policy = GenerationPolicy(image_root=work / "generated", seed=42)
genset = generate_all(corpus, backend, policy)
print(f"generated {len(genset)} images, {len(genset.failures)} failures")

# --- paraphrase expansion for the caption-side layout ---
paraphrases = expand_corpus(corpus, k=3, backend=backend, seed=42)

# --- the three layouts ---
base = build_sd_base(corpus, genset)
true = build_sd_true(corpus, genset)
para = build_sd_para(corpus, genset, paraphrases)

print(f"\nsd_base: {len(base)} pairs  (one per caption: {sum(counts)})")
print(f"sd_true: {len(true)} pairs  (all captions x all images per example: "
      f"{sum(c * c for c in counts)})")
print(f"sd_para: {len(para)} pairs  (source caption + surviving paraphrases each)")

print("\nfirst three sd_true pairs:")
for pair in true.pairs[:3]:
    print(f"  image cap{pair.image_ref_id}.png  <->  {pair.caption_text!r}")
