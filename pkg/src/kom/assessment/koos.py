"""KOOS questionnaire flow and subscale scoring."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

# Published item counts per subscale; every item is answered 0 (no problems)
# through 4 (extreme problems).
KOOS_ITEM_COUNTS = {
    "symptoms": 7,
    "pain": 9,
    "adl": 17,
    "sport": 5,
    "qol": 4,
}

SUBSCALE_ORDER = ("symptoms", "pain", "adl", "sport", "qol")


def score_subscale(items: Sequence[int]) -> float:
    """0-100 subscale score: items averaged then linearly rescaled, 100 = no problems."""
    items = list(items)
    if not items:
        raise ValueError("no item responses")
    for v in items:
        if not isinstance(v, int) or not 0 <= v <= 4:
            raise ValueError(f"item response {v!r} outside 0-4")
    return 100.0 - (sum(items) / len(items)) / 4.0 * 100.0


@dataclass
class KoosFlow:
    """Guided item-by-item questionnaire for one knee.

    ``submit`` validates each response and re-prompts out-of-range values;
    once all items are answered, ``scores`` holds the five subscale results.
    """

    side: str
    responses: dict[str, list[int]] = field(default_factory=dict)
    scores: Optional[dict[str, float]] = None
    _subscale_idx: int = 0
    _item_idx: int = 0

    @property
    def done(self) -> bool:
        return self.scores is not None

    def current_prompt(self) -> Optional[dict]:
        if self.done:
            return None
        subscale = SUBSCALE_ORDER[self._subscale_idx]
        return {
            "key": f"koos.{self.side}.{subscale}.item{self._item_idx + 1}",
            "text": (
                f"KOOS {subscale} item {self._item_idx + 1} of "
                f"{KOOS_ITEM_COUNTS[subscale]} for your {self.side} knee: rate the "
                "difficulty from 0 (none) to 4 (extreme)."
            ),
        }

    def submit(self, answer: str | int) -> dict:
        """Record one item response; returns {'ok': bool, 'reprompt': bool}."""
        if self.done:
            raise ValueError("questionnaire already complete")
        try:
            value = int(str(answer).strip())
        except ValueError:
            return {"ok": False, "reprompt": True}
        if not 0 <= value <= 4:
            return {"ok": False, "reprompt": True}

        subscale = SUBSCALE_ORDER[self._subscale_idx]
        self.responses.setdefault(subscale, []).append(value)
        self._item_idx += 1
        if self._item_idx >= KOOS_ITEM_COUNTS[subscale]:
            self._item_idx = 0
            self._subscale_idx += 1
            if self._subscale_idx >= len(SUBSCALE_ORDER):
                self.scores = {
                    s: score_subscale(self.responses[s]) for s in SUBSCALE_ORDER
                }
        return {"ok": True, "reprompt": False}
