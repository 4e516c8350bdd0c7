"""GCN-based solver for QUBO/PUBO-encoded graph optimisation problems."""

__version__ = "0.1.0"
