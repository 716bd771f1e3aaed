"""Multimodal audio caption pipeline: cue extraction, fusion, filtering,
calibration, analytics, retrieval eval, and an annotation service."""

__version__ = "0.1.0"
