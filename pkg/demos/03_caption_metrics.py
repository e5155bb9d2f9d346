"""Walkthrough: the caption evaluation metrics, computed from scratch.

BLEU-1..4 (corpus-level, closest-reference brevity penalty), ROUGE-L
(F-measure with beta=1.2), CIDEr-D (tf-idf n-gram cosine with length
penalty, averaged over n=1..4), and a METEOR-style unigram F-mean with a
fragmentation penalty. Internally everything lives in [0, 1] except
CIDEr-D in [0, 10]; reports multiply by 100 for display, matching the
convention of published tables.

Run: python3 demos/03_caption_metrics.py
"""

from capaug.capmetrics import EvalInstance, compute_report, tokenize

# three images, one candidate caption each, several references
data = [
    (
        "a man rides a brown horse",
        ["a man riding a horse", "a person rides a brown horse on a beach"],
    ),
    (
        "two dogs play with a ball in the grass",
        ["two dogs playing with a ball", "dogs play fetch on grass"],
    ),
    (
        "a red kitchen with white cabinets",
        ["a kitchen with red walls and white cabinets",
         "the kitchen has white cupboards"],
    ),
]

instances = [
    EvalInstance(
        image_id=i,
        candidate=tokenize(candidate),
        references=[tokenize(r) for r in refs],
    )
    for i, (candidate, refs) in enumerate(data)
]

report = compute_report(instances)
print("scores (x100 display scale):")
for name, value in report.to_display_dict().items():
    print(f"  {name:>8}: {value:6.2f}")

# sanity check: a candidate identical to its reference maxes everything
perfect = [
    EvalInstance(image_id=0, candidate=tokenize(c), references=[tokenize(c)])
    for c, _ in data
]
print("\nself-evaluation (candidate == reference):")
for name, value in compute_report(perfect).to_display_dict().items():
    print(f"  {name:>8}: {value:6.2f}")
