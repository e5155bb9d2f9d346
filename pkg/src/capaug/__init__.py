"""capaug: multimodal caption-dataset augmentation and evaluation.

Builds synthetic image-caption training sets from caption corpora (via a
text-to-image backend), expands captions by paraphrasing, constructs the
paired dataset variants and true/synthetic mixes, scores and filters pairs
by quality, and evaluates candidate captions with corpus metrics.
"""

__version__ = "0.1.0"
