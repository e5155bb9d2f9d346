"""Corpus-level caption metrics implemented from scratch.

Provides the shared tokenizer plus BLEU-1..4, ROUGE-L, CIDEr-D and a
reduced METEOR ("meteor_lite": exact unigram matching only, no stemming or
synonymy, with the canonical alpha/beta/gamma constants). All metrics are
corpus-level and invariant under permutation of instances.
"""

import json
import math
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyCandidateSet, MalformedResults, UnknownImageId

# METEOR-lite constants (canonical exact-match parameterization)
METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5

ROUGE_BETA = 1.2
CIDER_SIGMA = 6.0


def tokenize(text: str) -> list[str]:
    """Lowercase, drop punctuation characters, split on whitespace runs."""
    out = []
    for ch in text.lower():
        if unicodedata.category(ch).startswith("P"):
            continue
        out.append(ch)
    return "".join(out).split()


@dataclass(frozen=True)
class EvalInstance:
    image_id: int
    candidate: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.references:
            raise ValueError("EvalInstance requires at least one reference")


@dataclass(frozen=True)
class MetricReport:
    bleu1: float
    bleu2: float
    bleu3: float
    bleu4: float
    meteor_lite: float
    rouge_l: float
    cider_d: float

    FIELDS = ("bleu1", "bleu2", "bleu3", "bleu4", "meteor_lite", "rouge_l", "cider_d")

    def to_display_dict(self) -> dict:
        """Values on the x100 scale, 4 decimal places, fixed field order."""
        return {f: round(getattr(self, f) * 100.0, 4) for f in self.FIELDS}


def _ngram_counts(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(instances, max_n: int = 4) -> list[float]:
    """Corpus BLEU-1..max_n with closest-reference brevity penalty.

    Clipped n-gram counts are aggregated over the whole corpus (not averaged
    per sentence); no smoothing, so a zero precision at any order zeroes the
    higher-order scores.
    """
    if not instances:
        raise EmptyCandidateSet("no instances to score")
    matched = [0] * max_n
    total = [0] * max_n
    cand_len = 0
    ref_len = 0
    for inst in instances:
        cand = inst.candidate
        cand_len += len(cand)
        # closest reference length, shorter one on ties
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in inst.references)[1]
        for n in range(1, max_n + 1):
            counts = _ngram_counts(cand, n)
            maxref = Counter()
            for ref in inst.references:
                for g, c in _ngram_counts(ref, n).items():
                    maxref[g] = max(maxref[g], c)
            matched[n - 1] += sum(min(c, maxref[g]) for g, c in counts.items())
            total[n - 1] += max(0, len(cand) - n + 1)
    if cand_len == 0:
        return [0.0] * max_n
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    precisions = [matched[i] / total[i] if total[i] > 0 else 0.0 for i in range(max_n)]
    scores = []
    for n in range(1, max_n + 1):
        if any(p == 0.0 for p in precisions[:n]):
            scores.append(0.0)
            continue
        log_mean = sum(math.log(p) for p in precisions[:n]) / n
        scores.append(bp * math.exp(log_mean))
    return scores


def _lcs_len(a, b) -> int:
    # classic O(len(a)*len(b)) table, one row at a time
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(instances) -> float:
    """Mean over instances of the max-over-references LCS F-measure (beta=1.2)."""
    if not instances:
        raise EmptyCandidateSet("no instances to score")
    beta2 = ROUGE_BETA**2
    total = 0.0
    for inst in instances:
        best = 0.0
        for ref in inst.references:
            if not inst.candidate or not ref:
                continue
            lcs = _lcs_len(inst.candidate, ref)
            if lcs == 0:
                continue
            rec = lcs / len(ref)
            prec = lcs / len(inst.candidate)
            best = max(best, (1 + beta2) * rec * prec / (rec + beta2 * prec))
        total += best
    return total / len(instances)


def cider_d(instances, max_n: int = 4) -> float:
    """CIDEr-D with sigma=6 and count clipping.

    Document frequencies are computed over the instances' reference sets;
    per n-gram order, TF-IDF vectors are compared by clipped cosine, scaled
    by a Gaussian penalty on the candidate/reference length gap, averaged
    over references, scaled by 10, and averaged over orders.
    """
    if not instances:
        raise EmptyCandidateSet("no instances to score")
    num_docs = len(instances)
    # document frequency of each n-gram over reference sets
    df = [defaultdict(int) for _ in range(max_n)]
    for inst in instances:
        for n in range(1, max_n + 1):
            seen = set()
            for ref in inst.references:
                seen.update(_ngram_counts(ref, n).keys())
            for g in seen:
                df[n - 1][g] += 1

    def tfidf_vec(tokens, n):
        vec = {}
        for g, c in _ngram_counts(tokens, n).items():
            idf = math.log(num_docs / max(df[n - 1][g], 1))
            vec[g] = c * idf
        norm = math.sqrt(sum(v * v for v in vec.values()))
        return vec, norm

    total = 0.0
    for inst in instances:
        score_n = [0.0] * max_n
        for n in range(1, max_n + 1):
            cvec, cnorm = tfidf_vec(inst.candidate, n)
            acc = 0.0
            for ref in inst.references:
                rvec, rnorm = tfidf_vec(ref, n)
                if cnorm == 0.0 or rnorm == 0.0:
                    continue
                sim = sum(min(cv, rvec[g]) * rvec[g] for g, cv in cvec.items() if g in rvec)
                sim /= cnorm * rnorm
                delta = len(inst.candidate) - len(ref)
                sim *= math.exp(-(delta**2) / (2 * CIDER_SIGMA**2))
                acc += sim
            score_n[n - 1] = 10.0 * acc / len(inst.references)
        total += sum(score_n) / max_n
    return total / num_docs


def _min_chunks(cand, ref, node_cap: int = 200_000):
    """Exact-unigram alignment: maximize matches, then minimize chunks.

    Returns (matches, chunks). Backtracking with branch-and-bound; on
    pathological inputs (node budget exhausted) the best alignment found so
    far is returned, which is still match-maximal.
    """
    cand_counts = Counter(cand)
    ref_counts = Counter(ref)
    need = {w: min(cand_counts[w], ref_counts[w]) for w in cand_counts if w in ref_counts}
    matches = sum(need.values())
    if matches == 0:
        return 0, 0
    ref_pos = defaultdict(list)
    for j, w in enumerate(ref):
        ref_pos[w].append(j)

    best = matches + 1  # chunks can never exceed matches; sentinel upper bound
    used = [False] * len(ref)
    remaining_cand = dict(cand_counts)
    nodes = 0

    def rec(i, left, prev_pair, chunks):
        nonlocal best, nodes
        if chunks >= best:
            return
        if not left or all(v == 0 for v in left.values()):
            best = min(best, chunks)
            return
        nodes += 1
        if nodes > node_cap:
            return
        if i >= len(cand):
            return
        w = cand[i]
        remaining_cand[w] -= 1
        if left.get(w, 0) > 0:
            for j in ref_pos[w]:
                if used[j]:
                    continue
                used[j] = True
                left[w] -= 1
                cont = prev_pair is not None and prev_pair == (i - 1, j - 1)
                rec(i + 1, left, (i, j), chunks if cont else chunks + 1)
                left[w] += 1
                used[j] = False
            # skipping this occurrence is only legal if later ones can cover
            if remaining_cand[w] >= left[w]:
                rec(i + 1, left, prev_pair, chunks)
        else:
            rec(i + 1, left, prev_pair, chunks)
        remaining_cand[w] += 1

    rec(0, dict(need), None, 0)
    return matches, min(best, matches)


def meteor_lite(instances) -> float:
    """Reduced METEOR: exact unigram matches, fragmentation penalty.

    F_mean = P*R / (alpha*P + (1-alpha)*R); penalty = gamma*(chunks/matches)^beta;
    score = F_mean * (1 - penalty), max over references, mean over instances.
    """
    if not instances:
        raise EmptyCandidateSet("no instances to score")
    total = 0.0
    for inst in instances:
        best = 0.0
        for ref in inst.references:
            if not inst.candidate or not ref:
                continue
            matches, chunks = _min_chunks(list(inst.candidate), list(ref))
            if matches == 0:
                continue
            prec = matches / len(inst.candidate)
            rec = matches / len(ref)
            f_mean = prec * rec / (METEOR_ALPHA * prec + (1 - METEOR_ALPHA) * rec)
            penalty = METEOR_GAMMA * (chunks / matches) ** METEOR_BETA
            best = max(best, f_mean * (1 - penalty))
        total += best
    return total / len(instances)


def compute_report(instances) -> MetricReport:
    b = bleu(instances, 4)
    return MetricReport(
        bleu1=b[0],
        bleu2=b[1],
        bleu3=b[2],
        bleu4=b[3],
        meteor_lite=meteor_lite(instances),
        rouge_l=rouge_l(instances),
        cider_d=cider_d(instances),
    )


def load_results(path) -> dict[int, str]:
    """Read a results file: one {"image_id": int, "caption": str} per line."""
    results = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                image_id = int(rec["image_id"])
                caption = str(rec["caption"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedResults(f"{path}:{lineno}: {exc}") from exc
            if image_id in results:
                raise MalformedResults(f"{path}:{lineno}: duplicate image_id {image_id}")
            results[image_id] = caption
    return results


def evaluate_results(results_path, references) -> MetricReport:
    """Score a results file against a reference corpus with all metrics.

    ``references`` is a corpus object (see capaug.corpus); every image_id in
    the results file must exist in it.
    """
    results = load_results(results_path)
    if not results:
        raise EmptyCandidateSet(f"{results_path}: no candidate captions")
    by_id = {ex.image_id: ex for ex in references.examples}
    instances = []
    for image_id in sorted(results):
        if image_id not in by_id:
            raise UnknownImageId(f"image_id {image_id} not in reference corpus")
        refs = tuple(tuple(tokenize(c.text)) for c in by_id[image_id].captions)
        instances.append(
            EvalInstance(
                image_id=image_id,
                candidate=tuple(tokenize(results[image_id])),
                references=refs,
            )
        )
    return compute_report(instances)


def write_report(report: MetricReport, path) -> None:
    Path(path).write_text(
        json.dumps(report.to_display_dict(), indent=2) + "\n", encoding="utf-8"
    )
