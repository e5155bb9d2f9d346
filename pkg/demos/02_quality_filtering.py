"""Walkthrough: scoring pairs for quality and keeping the top half.

Every pair gets an image-text agreement score (2.5 * clamped cosine of
the image and caption embeddings), an object-grounding score (how well
detected object labels are covered by caption content words), and a
no-reference image quality score. Filtering keeps the top fraction by
one of those metrics, preserving original pair order.

Run: python3 demos/02_quality_filtering.py
"""

import tempfile
from pathlib import Path

from capaug.backends import make_backend
from capaug.corpus import CaptionRecord, Corpus, ExampleRecord
from capaug.dataset_builder import build_sd_base
from capaug.quality import (
    filter_top_fraction,
    make_image_resolver,
    quality_summary,
    score_pairs,
)
from capaug.synthesis import GenerationPolicy, generate_all

work = Path(tempfile.mkdtemp(prefix="capaug_demo_"))

captions = [
    "a dog catching a frisbee",
    "a bowl of fresh fruit on a counter",
    "two people walking on a rainy street",
    "a cat asleep on a laptop keyboard",
    "a sailboat near a lighthouse at dusk",
    "children playing soccer on a field",
]
corpus = Corpus(examples=[
    ExampleRecord(
        image_id=i,
        image_path=f"{i}.jpg",
        captions=[CaptionRecord(caption_id=i, text=text, origin="human")],
    )
    for i, text in enumerate(captions)
])

backend = make_backend("mock")
genset = generate_all(corpus, backend, GenerationPolicy(image_root=work / "gen", seed=42))
manifest = build_sd_base(corpus, genset)

resolve = make_image_resolver(corpus=corpus, image_root=work / "gen")
table = score_pairs(manifest, backend, resolve)

print("per-pair scores (raw scale):")
for rec in table.records:
    text = manifest.pairs[rec.pair_id].caption_text
    print(f"  clip={rec.clipscore:.3f}  vifidel={rec.vifidel:.3f} "
          f" musiq={rec.musiq:5.1f}  {text!r}")

summary = quality_summary(table)
print(f"\nmeans on the x100 display scale: "
      f"CLIPScore {summary['clipscore_mean_x100']:.1f}, "
      f"VIFIDEL {summary['vifidel_mean_x100']:.1f}, "
      f"MUSIQ {summary['musiq_mean']:.1f}")

kept = filter_top_fraction(manifest, table, metric="clipscore", fraction=0.5)
print(f"\ntop 50% by image-text agreement ({len(kept)} of {len(manifest)} pairs):")
for pair in kept.pairs:
    print(f"  {pair.caption_text!r}")
