"""Service layer: persistence, HTTP API, and whole-pipeline orchestration."""

from kom.service.storage import EventStore, StorageError, verify_chain
from kom.service.sessions import STAGES, PipelineSession, apply_event, replay
from kom.service.backend import MockBackend
from kom.service.api import create_app
from kom.service.pipeline import PipelineRunner

__all__ = [
    "EventStore",
    "StorageError",
    "verify_chain",
    "STAGES",
    "PipelineSession",
    "apply_event",
    "replay",
    "MockBackend",
    "create_app",
    "PipelineRunner",
]
