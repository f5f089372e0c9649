"""Rotation-based knowledge graph embeddings over complex and quaternion
modules, with a 1-vs-all training objective and filtered ranking evaluation."""

from . import algebra, data, model, ranking, train  # noqa: F401

__version__ = "0.1.0"
