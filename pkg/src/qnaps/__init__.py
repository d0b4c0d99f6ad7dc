"""Multiclass queueing network simulator with antipattern transforms,
an execution graph solver and an experiment harness."""

__version__ = "0.1.0"
