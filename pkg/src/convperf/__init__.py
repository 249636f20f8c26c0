"""Conversation performance modeling: ingest dialogue logs, tag social
dialogue acts, extract length-safe features, and predict ratings and
conversation length with an in-repo regression suite."""

__version__ = "0.1.0"
