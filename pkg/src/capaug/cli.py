"""Command-line front end for the augmentation pipeline.

Subcommands: ingest, stats, paraphrase, augment-images, generate, build,
score, filter, evaluate, mock-backend. A flat JSON config file provides
defaults; flags override the file; environment variables are ignored.
Exit codes: 0 success, 2 usage, 3 backend failure, 4 data error.
"""

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import (
    backends,
    capmetrics,
    corpus as corpus_mod,
    dataset_builder,
    imageaug,
    quality,
    synthesis,
    textaug,
)
from .errors import BackendError, PipelineError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_DATA = 4


@dataclass
class PipelineConfig:
    seed: int = 42
    k: int = 5
    p_flip: float = 0.5
    p_perspective: float = 0.5
    distortion_scale: float = 0.5
    max_attempts: int = 5
    parallelism: int = 1
    min_count: int = 5
    fraction: float = 0.5
    backend_urls: dict = field(default_factory=dict)  # role -> URL, "mock" allowed

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = cls()
        names = {f.name for f in fields(cls)}
        for key, value in raw.items():
            if key == "backend_urls":
                cfg.backend_urls = dict(value)
            elif key in names:
                setattr(cfg, key, value)
            else:
                raise ValueError(f"unknown config key {key!r}")
        return cfg

    def apply_flags(self, args) -> "PipelineConfig":
        for f in fields(self):
            if f.name == "backend_urls":
                continue
            flag = getattr(args, f.name, None)
            if flag is not None:
                setattr(self, f.name, flag)
        for spec in getattr(args, "backend_url", None) or []:
            role, _, url = spec.partition("=")
            if not url or role not in backends.ROLES:
                raise ValueError(f"bad --backend-url {spec!r}; expected <role>=<url>")
            self.backend_urls[role] = url
        return self

    def digest(self) -> str:
        blob = json.dumps(
            {f.name: getattr(self, f.name) for f in fields(self)}, sort_keys=True
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    return cfg.apply_flags(args)


def _write_run_metadata(out_path, cfg: PipelineConfig, command: str) -> None:
    meta = {
        "command": command,
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "started_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    Path(str(out_path) + ".run.json").write_text(json.dumps(meta, indent=2) + "\n")


def _pool(cfg: PipelineConfig) -> backends.BackendPool:
    return backends.BackendPool(cfg.backend_urls)


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_ingest(args, cfg):
    c = corpus_mod.load_annotations(args.annotations, args.split, args.split_file)
    corpus_mod.save_corpus(c, args.out)
    print(f"ingested {len(c)} examples / {c.caption_count()} captions -> {args.out}")


def cmd_stats(args, cfg):
    if args.manifest:
        m = dataset_builder.load_manifest(args.manifest)
        s = dataset_builder.manifest_stats(m, cfg.min_count)
        record = {
            "manifest": m.name,
            "image_count": s.image_count,
            "pair_count": s.pair_count,
            "distinct_caption_count": s.distinct_caption_count,
            "vocab_size": s.vocab_size,
        }
    else:
        c = corpus_mod.load_corpus(args.corpus)
        s = corpus_mod.corpus_stats(c, cfg.min_count)
        record = {
            "split": c.split_name,
            "image_count": s.image_count,
            "caption_count": s.caption_count,
            "vocab_size": s.vocab_size,
        }
    text = json.dumps(record, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)


def cmd_paraphrase(args, cfg):
    c = corpus_mod.load_corpus(args.corpus)
    pmap = textaug.expand_corpus(
        c, cfg.k, _pool(cfg)["paraphrase"], cfg.seed, cfg.parallelism
    )
    textaug.save_paraphrase_map(pmap, args.out, seed=cfg.seed)
    total = sum(len(ps.paraphrases) for ps in pmap.values())
    print(f"paraphrased {len(pmap)} captions, {total} kept -> {args.out}")
    if args.merged_out:
        merged = textaug.build_coco_text(c, pmap)
        corpus_mod.save_corpus(merged, args.merged_out)
        print(f"text-augmented corpus: {merged.caption_count()} captions -> {args.merged_out}")


def cmd_augment_images(args, cfg):
    c = corpus_mod.load_corpus(args.corpus)
    policy = imageaug.AugmentPolicy(
        p_flip=cfg.p_flip,
        p_perspective=cfg.p_perspective,
        distortion_scale=cfg.distortion_scale,
        seed=cfg.seed,
    )
    out = imageaug.build_coco_image(c, policy, args.image_root_out)
    corpus_mod.save_corpus(out, args.out)
    print(f"augmented {len(out)} images -> {args.image_root_out}")


def cmd_generate(args, cfg):
    c = corpus_mod.load_corpus(args.corpus)
    policy = synthesis.GenerationPolicy(
        image_root=Path(args.image_root),
        seed=cfg.seed,
        max_attempts=cfg.max_attempts,
        parallelism=cfg.parallelism,
    )
    gen = synthesis.generate_all(c, _pool(cfg)["txt2img"], policy)
    print(f"generated {len(gen)} images ({len(gen.failures)} failures) -> {args.image_root}")
    if gen.failures:
        for cap_id, msg in gen.failures:
            print(f"  caption {cap_id}: {msg}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_build(args, cfg):
    c = corpus_mod.load_corpus(args.corpus)
    gen = None
    if args.scheme != "coco":
        if not args.image_root:
            raise ValueError("--image-root required for synthetic schemes")
        policy = synthesis.GenerationPolicy(image_root=Path(args.image_root), seed=cfg.seed)
        gen = synthesis.GenerationSet(
            generated=list(synthesis.load_ledger(policy).values()), policy=policy
        )
    pmap = textaug.load_paraphrase_map(args.paraphrases) if args.paraphrases else {}

    if args.mix_fraction is not None:
        m = dataset_builder.build_mix(
            c, args.mix_fraction, args.scheme, gen, pmap,
            seed=cfg.seed, expand_all=args.expand_all,
        )
    elif args.scheme == "coco":
        m = dataset_builder.build_coco(c, build_seed=cfg.seed)
    elif args.scheme == "sd_base":
        m = dataset_builder.build_sd_base(c, gen, build_seed=cfg.seed)
    elif args.scheme == "sd_true":
        m = dataset_builder.build_sd_true(c, gen, build_seed=cfg.seed)
    else:
        m = dataset_builder.build_sd_para(c, gen, pmap, build_seed=cfg.seed)
    dataset_builder.save_manifest(m, args.out)
    print(f"built {m.name}: {len(m)} pairs -> {args.out}")


def cmd_score(args, cfg):
    m = dataset_builder.load_manifest(args.manifest)
    c = corpus_mod.load_corpus(args.corpus) if args.corpus else None
    resolver = quality.make_image_resolver(corpus=c, image_root=args.image_root)
    table = quality.score_pairs(m, _pool(cfg), resolver)
    quality.save_quality_table(table, args.out)
    print(f"scored {len(table)} pairs ({len(table.errors)} failures) -> {args.out}")
    summary = quality.quality_summary(table)
    print(json.dumps(summary, indent=2))
    if args.summary_out:
        Path(args.summary_out).write_text(json.dumps(summary, indent=2) + "\n")


def cmd_filter(args, cfg):
    m = dataset_builder.load_manifest(args.manifest)
    table = quality.load_quality_table(args.quality)
    out = quality.filter_top_fraction(m, table, args.metric, cfg.fraction)
    dataset_builder.save_manifest(out, args.out)
    print(f"kept {len(out)}/{len(m)} pairs by {args.metric} -> {args.out}")


def cmd_evaluate(args, cfg):
    refs = corpus_mod.load_corpus(args.corpus)
    report = capmetrics.evaluate_results(args.results, refs)
    capmetrics.write_report(report, args.out)
    print(json.dumps(report.to_display_dict(), indent=2))


def cmd_mock_backend(args, cfg):
    from . import mock_server

    mock_server.serve_forever(args.port)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capaug", description=__doc__)
    parser.add_argument("--config", help="flat JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--backend-url", action="append", metavar="ROLE=URL",
        help="backend endpoint per role; the URL 'mock' selects the built-in "
             "deterministic backend",
    )
    parser.add_argument("--k", type=int, default=None, help="paraphrases per caption")
    parser.add_argument("--parallelism", type=int, default=None)
    parser.add_argument("--max-attempts", dest="max_attempts", type=int, default=None)
    parser.add_argument("--min-count", dest="min_count", type=int, default=None)
    parser.add_argument("--p-flip", dest="p_flip", type=float, default=None)
    parser.add_argument("--p-perspective", dest="p_perspective", type=float, default=None)
    parser.add_argument("--distortion-scale", dest="distortion_scale", type=float, default=None)
    parser.add_argument("--fraction", type=float, default=None, help="filter keep fraction")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load COCO-style annotations into a corpus file")
    p.add_argument("--annotations", required=True)
    p.add_argument("--split", default="all", choices=corpus_mod.KNOWN_SPLITS)
    p.add_argument("--split-file", dest="split_file", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="descriptive statistics of a corpus or manifest")
    p.add_argument("--corpus")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("paraphrase", help="expand captions via the paraphrase backend")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--merged-out", dest="merged_out",
                   help="also write the text-augmented corpus")
    p.set_defaults(func=cmd_paraphrase)

    p = sub.add_parser("augment-images", help="flip/perspective image augmentation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--image-root-out", dest="image_root_out", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_augment_images)

    p = sub.add_parser("generate", help="one synthetic image per caption")
    p.add_argument("--corpus", required=True)
    p.add_argument("--image-root", dest="image_root", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build", help="construct a pair manifest")
    p.add_argument("--corpus", required=True)
    p.add_argument("--scheme", required=True,
                   choices=("sd_base", "sd_true", "sd_para", "coco"))
    p.add_argument("--mix-fraction", dest="mix_fraction", type=float, default=None,
                   help="percentage of examples contributing true pairs")
    p.add_argument("--expand-all", dest="expand_all", action="store_true",
                   help="in mixes, expand all examples synthetically, not just the remainder")
    p.add_argument("--image-root", dest="image_root",
                   help="generation root holding the ledger (synthetic schemes)")
    p.add_argument("--paraphrases", help="paraphrase map file (sd_para)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("score", help="score all pairs of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--corpus", help="needed to resolve true-image pairs")
    p.add_argument("--image-root", dest="image_root")
    p.add_argument("--out", required=True)
    p.add_argument("--summary-out", dest="summary_out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("filter", help="keep the top fraction by a quality metric")
    p.add_argument("--manifest", required=True)
    p.add_argument("--quality", required=True)
    p.add_argument("--metric", required=True, choices=("clipscore", "vifidel", "musiq"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("evaluate", help="caption metrics against a reference corpus")
    p.add_argument("--results", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("mock-backend", help="serve the deterministic mock backend")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(func=cmd_mock_backend)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": "usage", "detail": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    try:
        status = args.func(args, cfg)
        out = getattr(args, "out", None)
        if out:
            _write_run_metadata(out, cfg, args.command)
        return EXIT_OK if status is None else status
    except BackendError as exc:
        print(json.dumps({"error": "backend", "detail": str(exc)}), file=sys.stderr)
        return EXIT_BACKEND
    except (PipelineError, ValueError, OSError) as exc:
        print(json.dumps({"error": "data", "detail": str(exc)}), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
