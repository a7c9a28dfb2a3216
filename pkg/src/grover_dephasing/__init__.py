"""Grover search under localized dephasing: reduced and exact simulators,
closed-form approximations, cost scaling and the star-graph walk mapping."""

__version__ = "0.1.0"
