"""Hierarchical object search with a coverage-driven pose planner for a mobile manipulator."""

__version__ = "0.1.0"
