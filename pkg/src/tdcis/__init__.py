"""Time-dependent configuration-interaction-singles photoionization engine."""

__version__ = "0.1.0"
