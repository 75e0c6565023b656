"""Workbench for adaptive data-curation rules.

Boolean rule trees over token and knowledge features, bandit-driven rule
adaptation against verified feedback, concept summaries of annotated corpora,
and concept-based ranking, behind a CLI and an HTTP service.
"""

__version__ = "0.1.0"
