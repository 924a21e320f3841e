"""Concept drift detection and adaptation with hierarchical hypothesis tests."""
