"""Independent brute-force oracles used to cross-check the library.

Deliberately written with different code paths from the library: explicit
per-instance loops, full vector spaces for TF-IDF, memoized recursion for
LCS, and an SVD-based homography solve.
"""

import itertools
import math
from collections import Counter
from functools import lru_cache

import numpy as np


def ngrams(tokens, n):
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def bleu_oracle(instances, max_n=4):
    """Corpus BLEU-1..max_n, recomputed naively."""
    num = [0.0] * max_n
    den = [0.0] * max_n
    c_total = 0
    r_total = 0
    for inst in instances:
        cand = list(inst.candidate)
        refs = [list(r) for r in inst.references]
        c_total += len(cand)
        best = None
        for r in refs:
            key = (abs(len(r) - len(cand)), len(r))
            if best is None or key < best:
                best = key
        r_total += best[1]
        for n in range(1, max_n + 1):
            cand_counts = Counter(ngrams(cand, n))
            clipped = 0
            for g, c in cand_counts.items():
                max_ref = max(Counter(ngrams(r, n)).get(g, 0) for r in refs)
                clipped += min(c, max_ref)
            num[n - 1] += clipped
            den[n - 1] += len(ngrams(cand, n))
    bp = 1.0 if c_total >= r_total else math.exp(1 - r_total / max(c_total, 1))
    out = []
    for n in range(1, max_n + 1):
        ps = []
        ok = True
        for k in range(n):
            if den[k] == 0 or num[k] == 0:
                ok = False
                break
            ps.append(num[k] / den[k])
        if not ok:
            out.append(0.0)
        else:
            geo = math.exp(sum(math.log(p) for p in ps) / n)
            out.append(bp * geo)
    return out


def lcs_oracle(a, b):
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + rec(i + 1, j + 1)
        return max(rec(i + 1, j), rec(i, j + 1))

    return rec(0, 0)


def rouge_l_oracle(instances, beta=1.2):
    scores = []
    for inst in instances:
        best = 0.0
        for ref in inst.references:
            l = lcs_oracle(inst.candidate, ref)
            if l == 0 or not inst.candidate or not ref:
                continue
            r = l / len(ref)
            p = l / len(inst.candidate)
            f = (1 + beta * beta) * r * p / (r + beta * beta * p)
            best = max(best, f)
        scores.append(best)
    return sum(scores) / len(scores)


def cider_d_oracle(instances, max_n=4, sigma=6.0):
    """CIDEr-D over the full global n-gram space per order."""
    total_docs = len(instances)
    final = 0.0
    for n in range(1, max_n + 1):
        space = sorted(
            {g for inst in instances for ref in inst.references for g in ngrams(list(ref), n)}
            | {g for inst in instances for g in ngrams(list(inst.candidate), n)}
        )
        index = {g: i for i, g in enumerate(space)}
        df = np.zeros(len(space))
        for inst in instances:
            present = set()
            for ref in inst.references:
                present.update(ngrams(list(ref), n))
            for g in present:
                df[index[g]] += 1

        def vec(tokens):
            v = np.zeros(len(space))
            for g, c in Counter(ngrams(list(tokens), n)).items():
                v[index[g]] = c * math.log(total_docs / max(df[index[g]], 1.0))
            return v

        order_sum = 0.0
        for inst in instances:
            cv = vec(inst.candidate)
            acc = 0.0
            for ref in inst.references:
                rv = vec(ref)
                ncv = np.linalg.norm(cv)
                nrv = np.linalg.norm(rv)
                if ncv == 0 or nrv == 0:
                    continue
                sim = float(np.dot(np.minimum(cv, rv), rv)) / (ncv * nrv)
                diff = len(inst.candidate) - len(ref)
                sim *= math.exp(-(diff * diff) / (2 * sigma * sigma))
                acc += sim
            order_sum += 10.0 * acc / len(inst.references)
        final += order_sum / total_docs
    return final / max_n


def meteor_chunks_oracle(cand, ref):
    """Exhaustive (matches, min_chunks) search; only for tiny sequences."""
    cand, ref = list(cand), list(ref)
    matches = sum((Counter(cand) & Counter(ref)).values())
    if matches == 0:
        return 0, 0
    cand_pos = {}
    for i, w in enumerate(cand):
        cand_pos.setdefault(w, []).append(i)
    ref_pos = {}
    for j, w in enumerate(ref):
        ref_pos.setdefault(w, []).append(j)
    best = matches
    need = Counter(cand) & Counter(ref)
    words = sorted(need)
    # enumerate every choice of candidate occurrences and ref assignments
    cand_choices = [
        list(itertools.combinations(cand_pos[w], need[w])) for w in words
    ]
    ref_choices = [
        list(itertools.permutations(ref_pos[w], need[w])) for w in words
    ]
    for cand_pick in itertools.product(*cand_choices):
        for ref_pick in itertools.product(*ref_choices):
            pairs = []
            for w_i in range(len(words)):
                pairs.extend(zip(cand_pick[w_i], ref_pick[w_i]))
            pairs.sort()
            chunks = 0
            prev = None
            for ci, rj in pairs:
                if prev is None or prev != (ci - 1, rj - 1):
                    chunks += 1
                prev = (ci, rj)
            best = min(best, chunks)
    return matches, best


def homography_oracle(src, dst):
    """9-parameter DLT solved by SVD null space, normalized to h33=1."""
    rows = []
    for (x, y), (u, v) in zip(src, dst):
        rows.append([x, y, 1, 0, 0, 0, -u * x, -u * y, -u])
        rows.append([0, 0, 0, x, y, 1, -v * x, -v * y, -v])
    _, _, vt = np.linalg.svd(np.array(rows, dtype=float))
    h = vt[-1].reshape(3, 3)
    return h / h[2, 2]


def project(h, points):
    pts = np.asarray(points, dtype=float)
    homog = np.column_stack([pts, np.ones(len(pts))]) @ h.T
    return homog[:, :2] / homog[:, 2:3]
