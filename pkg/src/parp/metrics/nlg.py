"""Text-similarity metrics: corpus BLEU-n, ROUGE-L and a METEOR variant.

All three share one tokenizer: lowercase, words split on whitespace,
punctuation marks as separate tokens.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from nltk.stem.porter import PorterStemmer

from ..core import ValidationError

_TOKEN = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Corpus:
    """Aligned ``(image_id, candidate, reference)`` triples."""

    ids: tuple[str, ...]
    candidates: tuple[str, ...]
    references: tuple[str, ...]

    def __post_init__(self):
        if not (len(self.ids) == len(self.candidates) == len(self.references)):
            raise ValidationError("corpus columns differ in length")
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("corpus image ids must be unique")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_pairs(cls, candidates: Sequence[str], references: Sequence[str]) -> Corpus:
        ids = tuple(str(i) for i in range(len(candidates)))
        return cls(ids, tuple(candidates), tuple(references))

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, str, str]]) -> Corpus:
        rows = list(records)
        return cls(
            tuple(r[0] for r in rows), tuple(r[1] for r in rows), tuple(r[2] for r in rows)
        )


def _as_corpus(corpus) -> Corpus:
    if isinstance(corpus, Corpus):
        c = corpus
    else:
        cands, refs = corpus
        c = Corpus.from_pairs(list(cands), list(refs))
    if len(c) == 0:
        raise ValidationError("empty corpus")
    return c


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(corpus, max_n: int = 4) -> dict:
    """Clipped n-gram matches and totals per order, plus corpus lengths."""
    c = _as_corpus(corpus)
    matches = [0] * max_n
    totals = [0] * max_n
    cand_len = ref_len = 0
    for cand, ref in zip(c.candidates, c.references):
        ct, rt = tokenize(cand), tokenize(ref)
        cand_len += len(ct)
        ref_len += len(rt)
        for n in range(1, max_n + 1):
            cg, rg = _ngrams(ct, n), _ngrams(rt, n)
            matches[n - 1] += sum(min(k, rg[g]) for g, k in cg.items())
            totals[n - 1] += max(len(ct) - n + 1, 0)
    return {"matches": matches, "totals": totals, "cand_len": cand_len, "ref_len": ref_len}


def bleu_n(corpus, n: int = 4, smooth: bool = False) -> float:
    """Corpus-level BLEU with uniform weights over orders ``1..n``.

    Without smoothing any order with zero matches gives 0. ``smooth=True``
    applies add-one smoothing to orders 2 and above.
    """
    if n not in (1, 2, 3, 4):
        raise ValidationError(f"BLEU order must be 1..4, got {n}")
    st = bleu_stats(corpus, n)
    c, r = st["cand_len"], st["ref_len"]
    if c == 0:
        return 0.0
    log_p = 0.0
    for k in range(n):
        m, t = st["matches"][k], st["totals"][k]
        if smooth and k > 0:
            m, t = m + 1, t + 1
        if m == 0 or t == 0:
            return 0.0
        log_p += math.log(m / t) / n
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return bp * math.exp(log_p)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l_sentence(candidate: str, reference: str, beta: float = 1.2) -> float:
    ct, rt = tokenize(candidate), tokenize(reference)
    if not ct or not rt:
        return 1.0 if ct == rt else 0.0
    lcs = lcs_length(ct, rt)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(ct), lcs / len(rt)
    b2 = beta**2
    return (1 + b2) * p * r / (r + b2 * p)


def rouge_l(corpus, beta: float = 1.2) -> float:
    """Mean per-sample LCS F-measure; ``beta`` weights recall over precision."""
    c = _as_corpus(corpus)
    return sum(rouge_l_sentence(a, b, beta) for a, b in zip(c.candidates, c.references)) / len(c)


_stemmer = PorterStemmer()


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    return _stemmer.stem(word)


def meteor_alignment(cand: Sequence[str], ref: Sequence[str]) -> list[tuple[int, int]]:
    """Unigram alignment as sorted ``(cand_pos, ref_pos)`` pairs.

    Exact matches are aligned first, then Porter-stem matches among the
    leftovers. Within a stage each candidate token, left to right, takes
    the free reference position nearest to just after the previous
    alignment, which keeps contiguous runs together.
    """
    used_c: set[int] = set()
    used_r: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for key in (lambda w: w, stem):
        ref_keys = [key(w) for w in ref]
        last = -1
        for i, w in enumerate(cand):
            if i in used_c:
                last = next((r for c, r in pairs if c == i), last)
                continue
            kw = key(w)
            free = [j for j, k in enumerate(ref_keys) if k == kw and j not in used_r]
            if not free:
                continue
            j = min(free, key=lambda j: (abs(j - (last + 1)), j))
            used_c.add(i)
            used_r.add(j)
            pairs.append((i, j))
            last = j
    return sorted(pairs)


def count_chunks(pairs: Sequence[tuple[int, int]]) -> int:
    """Runs of alignments adjacent in both candidate and reference."""
    chunks = 0
    prev = None
    for c, r in pairs:
        if prev is None or c != prev[0] + 1 or r != prev[1] + 1:
            chunks += 1
        prev = (c, r)
    return chunks


def meteor_sentence(
    candidate: str, reference: str, alpha: float = 0.9, beta: float = 3.0, gamma: float = 0.5
) -> float:
    ct, rt = tokenize(candidate), tokenize(reference)
    pairs = meteor_alignment(ct, rt)
    m = len(pairs)
    if m == 0:
        return 0.0
    p, r = m / len(ct), m / len(rt)
    f_mean = p * r / (alpha * p + (1 - alpha) * r)
    penalty = gamma * (count_chunks(pairs) / m) ** beta
    return f_mean * (1 - penalty)


def meteor_variant(corpus, alpha: float = 0.9, beta: float = 3.0, gamma: float = 0.5) -> float:
    """Mean per-sample METEOR score using exact and stem matching only (no synonyms)."""
    c = _as_corpus(corpus)
    scores = [meteor_sentence(a, b, alpha, beta, gamma) for a, b in zip(c.candidates, c.references)]
    return sum(scores) / len(c)


def nlg_report(corpus, smooth: bool = False, rouge_beta: float = 1.2) -> dict:
    c = _as_corpus(corpus)
    out = {f"bleu_{n}": bleu_n(c, n, smooth) for n in range(1, 5)}
    out["meteor_variant"] = meteor_variant(c)
    out["rouge_l"] = rouge_l(c, rouge_beta)
    out["config"] = {
        "tokenizer": "lowercase, punctuation split",
        "bleu_smoothing": "add-one (orders >= 2)" if smooth else "none",
        "rouge_beta": rouge_beta,
        "meteor": {"alpha": 0.9, "beta": 3.0, "gamma": 0.5, "stages": ["exact", "porter_stem"]},
    }
    out["n_samples"] = len(c)
    return out
