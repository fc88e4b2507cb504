"""Behavior-tree generation toolkit: model, XML dialect, validation,
tick interpreter, LLM-backed generation, dataset factory, and stats."""

__version__ = "0.1.0"
