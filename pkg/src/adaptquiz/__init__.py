"""Adaptive multiple-choice assessment engine with LLM teacher/student
backends and a deterministic offline experiment harness."""

__version__ = "0.1.0"
