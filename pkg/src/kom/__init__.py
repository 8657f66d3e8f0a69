"""Knee osteoarthritis management pipeline.

Subpackages cover the three clinical agents and their harnesses:

- ``kom.imaging``: joint localization, severity/feature classification.
- ``kom.assessment``: intake dialogue and structured evaluation reports.
- ``kom.risk``: tabular outcome prediction with per-feature attribution.
- ``kom.therapy``: evidence retrieval and multidisciplinary plan synthesis.
- ``kom.evaluation``: text-similarity metrics, statistics, scoring harness.
- ``kom.service``: HTTP service, persistence, and pipeline orchestration.
"""

__version__ = "0.1.0"
