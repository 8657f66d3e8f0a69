"""Environment and YAML configuration for the service and CLI."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import yaml


@dataclass
class ServiceConfig:
    data_dir: Path
    llm_backend: str = "mock"
    seed: int = 0
    imaging_models_dir: Optional[Path] = None
    risk_models_dir: Optional[Path] = None
    kb_dir: Optional[Path] = None
    arms: list = None

    @classmethod
    def from_env(cls, config_file: Optional[str | Path] = None) -> "ServiceConfig":
        data_dir = Path(os.environ.get("KOM_DATA_DIR", "./kom-data"))
        backend = os.environ.get("KOM_LLM_BACKEND", "mock")
        seed = int(os.environ.get("KOM_SEED", "0"))
        cfg = cls(data_dir=data_dir, llm_backend=backend, seed=seed, arms=[])
        if config_file:
            payload = yaml.safe_load(Path(config_file).read_text()) or {}
            models = payload.get("models", {})
            if "imaging" in models:
                cfg.imaging_models_dir = Path(models["imaging"])
            if "risk" in models:
                cfg.risk_models_dir = Path(models["risk"])
            if "kb_dir" in payload:
                cfg.kb_dir = Path(payload["kb_dir"])
            cfg.arms = payload.get("arms", [])
            if "data_dir" in payload:
                cfg.data_dir = Path(payload["data_dir"])
            if "seed" in payload:
                cfg.seed = int(payload["seed"])
        return cfg
