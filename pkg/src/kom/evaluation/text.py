"""Text similarity: BLEU, ROUGE-L, and embedding-based semantic scores.

All metrics use one fixed tokenizer (lowercased alphanumeric runs), so any
whitespace normalization that preserves token boundaries leaves scores
unchanged.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Optional, Sequence

import numpy as np

from kom.embedding import HashEmbedder, cosine, tokenize

TokenSeq = Sequence[str]


def _tokens(text_or_tokens) -> list[str]:
    if isinstance(text_or_tokens, str):
        return tokenize(text_or_tokens)
    return list(text_or_tokens)


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _bleu_components(
    candidate: list[str], reference: list[str], max_n: int
) -> tuple[list[tuple[int, int]], int, int]:
    """Clipped match/total pairs per usable n-gram order, plus lengths.

    Orders longer than the candidate contribute no n-grams and are excluded
    from the geometric mean rather than zeroing it.
    """
    components = []
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(candidate, n)
        total = sum(cand_counts.values())
        if total == 0:
            continue
        ref_counts = _ngram_counts(reference, n)
        matched = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        components.append((matched, total))
    return components, len(candidate), len(reference)


def _combine_bleu(
    components: list[tuple[int, int]], cand_len: int, ref_len: int, smoothing: bool
) -> float:
    if not components or cand_len == 0:
        return 0.0
    logs = []
    for order, (matched, total) in enumerate(components, start=1):
        if smoothing and order > 1:
            precision = (matched + 1.0) / (total + 1.0)
        else:
            if matched == 0:
                return 0.0
            precision = matched / total
        logs.append(math.log(precision))
    brevity = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.exp(sum(logs) / len(logs))


def bleu(candidate, reference, max_n: int = 4, smoothing: bool = False) -> float:
    """Sentence BLEU: geometric mean of clipped n-gram precisions x brevity penalty.

    Unsmoothed mode returns 0 when any usable precision is 0; smoothed mode
    applies add-one smoothing to orders above 1.
    """
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not ref:
        raise ValueError("reference must be non-empty")
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    components, cand_len, ref_len = _bleu_components(cand, ref, max_n)
    return _combine_bleu(components, cand_len, ref_len, smoothing)


def corpus_bleu(pairs: Sequence[tuple], max_n: int = 4, smoothing: bool = False) -> float:
    """Corpus BLEU: n-gram matches and lengths pooled across all pairs."""
    if not pairs:
        raise ValueError("no pairs")
    totals = [[0, 0] for _ in range(max_n)]
    cand_len_sum = 0
    ref_len_sum = 0
    for candidate, reference in pairs:
        cand = _tokens(candidate)
        ref = _tokens(reference)
        if not ref:
            raise ValueError("reference must be non-empty")
        for n in range(1, max_n + 1):
            cand_counts = _ngram_counts(cand, n)
            total = sum(cand_counts.values())
            if total == 0:
                continue
            ref_counts = _ngram_counts(ref, n)
            matched = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
            totals[n - 1][0] += matched
            totals[n - 1][1] += total
        cand_len_sum += len(cand)
        ref_len_sum += len(ref)
    components = [(m, t) for m, t in totals if t > 0]
    return _combine_bleu(components, cand_len_sum, ref_len_sum, smoothing)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        curr = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                curr[j] = prev[j - 1] + 1
            else:
                curr[j] = max(prev[j], curr[j - 1])
        prev = curr
    return prev[len(b)]


def rouge_l(candidate, reference, beta: float = 1.0) -> float:
    """ROUGE-L F-measure from longest-common-subsequence precision and recall."""
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not cand:
        return 0.0  # empty candidate: flagged degenerate, scored zero
    if not ref:
        raise ValueError("reference must be non-empty")
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    b2 = beta * beta
    return (1 + b2) * precision * recall / (recall + b2 * precision)


def corpus_rouge_l(pairs: Sequence[tuple], beta: float = 1.0) -> float:
    """Micro-averaged ROUGE-L: LCS and length totals pooled across pairs."""
    if not pairs:
        raise ValueError("no pairs")
    lcs_sum = cand_sum = ref_sum = 0
    for candidate, reference in pairs:
        cand = _tokens(candidate)
        ref = _tokens(reference)
        if not ref:
            raise ValueError("reference must be non-empty")
        lcs_sum += _lcs_length(cand, ref)
        cand_sum += len(cand)
        ref_sum += len(ref)
    if lcs_sum == 0 or cand_sum == 0:
        return 0.0
    precision = lcs_sum / cand_sum
    recall = lcs_sum / ref_sum
    b2 = beta * beta
    return (1 + b2) * precision * recall / (recall + b2 * precision)


def semantic_similarity(
    candidate: str,
    reference: str,
    embedder: Optional[HashEmbedder] = None,
    mode: str = "cosine",
) -> float:
    """Embedding similarity: document cosine, or greedy token-matching F1.

    Both modes are invariant to uniform scaling of the embeddings.
    """
    if not candidate or not reference:
        raise ValueError("candidate and reference must be non-empty")
    embedder = embedder or HashEmbedder()
    if mode == "cosine":
        return cosine(embedder.embed(candidate), embedder.embed(reference))
    if mode == "token-f":
        cand_vecs = embedder.embed_tokens(candidate)
        ref_vecs = embedder.embed_tokens(reference)
        sims = cand_vecs @ ref_vecs.T
        norms = np.linalg.norm(cand_vecs, axis=1)[:, None] * np.linalg.norm(ref_vecs, axis=1)[None, :]
        sims = sims / np.where(norms == 0, 1.0, norms)
        precision = float(sims.max(axis=1).mean())
        recall = float(sims.max(axis=0).mean())
        if precision + recall == 0:
            return 0.0
        return 2 * precision * recall / (precision + recall)
    raise ValueError(f"unknown similarity mode: {mode}")
