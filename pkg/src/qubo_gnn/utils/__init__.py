"""Utility package for qubo_gnn.

Configuration loading, structured logging, Prometheus metrics and phase
timing, hashing and checkpoint management for resumable benchmarks.
"""

__all__ = ["config", "logging", "metrics", "hashing", "checkpoints"]
