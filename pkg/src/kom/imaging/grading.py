"""KL grade consolidation and the OA-presence threshold."""

from __future__ import annotations

from kom.imaging.types import SeverityClass, validate_kl

_KL_TO_SEVERITY = {
    0: SeverityClass.NONE_DOUBT,
    1: SeverityClass.NONE_DOUBT,
    2: SeverityClass.MILD,
    3: SeverityClass.MODERATE,
    4: SeverityClass.SEVERE,
}

# Representative KL value when only a 4-class severity is available.
_SEVERITY_TO_KL = {
    SeverityClass.NONE_DOUBT: 0,
    SeverityClass.MILD: 2,
    SeverityClass.MODERATE: 3,
    SeverityClass.SEVERE: 4,
}


def kl_to_severity(kl: int) -> SeverityClass:
    """Collapse the 5-level KL scale onto the 4-class severity scale.

    KL 0 and 1 merge into NoneDoubt; KL 2, 3, 4 map to Mild, Moderate, Severe.
    """
    return _KL_TO_SEVERITY[validate_kl(kl)]


def derive_oa_presence(kl: int) -> bool:
    """OA is considered present from KL grade 2 upward."""
    return validate_kl(kl) >= 2


def severity_to_kl_estimate(severity: SeverityClass) -> int:
    """Lowest KL grade consistent with a severity class."""
    return _SEVERITY_TO_KL[severity]
