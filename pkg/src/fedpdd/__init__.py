"""Simulator for two-party federated recommendation by private double distillation."""

__version__ = "0.1.0"
