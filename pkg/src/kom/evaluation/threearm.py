"""Multi-arm comparison harness: approval, similarity, rubric, and timing."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from kom.evaluation.scores import RubricScore, aggregate_rubric, approval_rate
from kom.evaluation.text import bleu, corpus_bleu, corpus_rouge_l, rouge_l, semantic_similarity

CaseProcessor = Callable[[dict], dict]  # case -> {"grading": ..., "plan_text": ..., "time_s": ...}
TimerSource = Callable[[int], float]  # case index -> seconds


@dataclass
class ArmConfig:
    name: str
    processor: CaseProcessor
    timer: Optional[TimerSource] = None
    rubric_rows: list = field(default_factory=list)


def _similarity_block(outputs: list[dict], cases: list[dict], gold: dict) -> Optional[dict]:
    pairs = []
    sentence_bleu, sentence_rouge, sentence_semantic = [], [], []
    for case, output in zip(cases, outputs):
        text = output.get("plan_text")
        reference = gold.get(case["case_id"])
        if text is None or reference is None:
            continue
        pairs.append((text, reference))
        sentence_bleu.append(bleu(text, reference, smoothing=True))
        sentence_rouge.append(rouge_l(text, reference))
        sentence_semantic.append(semantic_similarity(text, reference))
    if not pairs:
        return None
    return {
        "bleu_corpus": corpus_bleu(pairs, smoothing=True),
        "bleu_sentence_mean": float(np.mean(sentence_bleu)),
        "rouge_l_corpus": corpus_rouge_l(pairs),
        "rouge_l_sentence_mean": float(np.mean(sentence_rouge)),
        "semantic_mean": float(np.mean(sentence_semantic)),
        "n_scored": len(pairs),
    }


def run_three_arm(
    cases: Sequence[dict],
    arms: Sequence[ArmConfig],
    seed: int = 0,
    gold: Optional[dict] = None,
) -> dict:
    """Run every arm's processor over the cases and aggregate the results.

    Each case dict needs a ``case_id`` and may carry a ``reference_grading``.
    Per-case times come from the processor output (``time_s``) or the arm's
    timer source, and must be positive. Pairwise entries report the relative
    reduction in mean time from the first arm to the second.
    """
    cases = list(cases)
    if not cases:
        raise ValueError("no cases")
    if not arms:
        raise ValueError("no arms configured")
    gold = gold or {}

    arm_results: dict[str, dict] = {}
    for arm in arms:
        if arm.processor is None:
            raise ValueError(f"arm {arm.name!r} has no case processor")
        outputs = [arm.processor(case) for case in cases]

        times = []
        for i, output in enumerate(outputs):
            t = output.get("time_s")
            if t is None and arm.timer is not None:
                t = arm.timer(i)
            if t is not None:
                if t <= 0:
                    raise ValueError(f"arm {arm.name!r}: case {i} has non-positive time {t}")
                times.append(float(t))

        gradings = [o.get("grading") for o in outputs]
        references = [c.get("reference_grading") for c in cases]
        approval = None
        if all(g is not None for g in gradings) and all(r is not None for r in references):
            approval = approval_rate(gradings, references)

        rubric = aggregate_rubric([RubricScore.from_dict(r) if isinstance(r, dict) else r for r in arm.rubric_rows]) if arm.rubric_rows else None

        arm_results[arm.name] = {
            "arm": arm.name,
            "n_cases": len(cases),
            "approval_rate": approval,
            "times": times,
            "time_mean": float(np.mean(times)) if times else None,
            "time_sd": float(np.std(times, ddof=1)) if len(times) > 1 else None,
            "similarity": _similarity_block(outputs, cases, gold),
            "rubric": rubric,
        }

    pairwise: dict[str, dict] = {}
    names = [a.name for a in arms]
    for i, first in enumerate(names):
        for second in names[i + 1 :]:
            t1 = arm_results[first]["time_mean"]
            t2 = arm_results[second]["time_mean"]
            if t1 and t2:
                pairwise[f"{first}->{second}"] = {
                    "time_reduction": (t1 - t2) / t1,
                    "time_reduction_pct": 100.0 * (t1 - t2) / t1,
                }

    return {"seed": seed, "arms": arm_results, "pairwise": pairwise}


def scripted_processor(outputs_by_case: dict) -> CaseProcessor:
    """Processor that replays canned outputs keyed by case id."""

    def process(case: dict) -> dict:
        case_id = case["case_id"]
        if case_id not in outputs_by_case:
            raise KeyError(f"scripted processor has no output for case {case_id!r}")
        return dict(outputs_by_case[case_id])

    return process


def scripted_timer(values: Sequence[float]) -> TimerSource:
    values = [float(v) for v in values]

    def timer(index: int) -> float:
        return values[index % len(values)]

    return timer
