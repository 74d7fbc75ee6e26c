"""Adversarial risk analysis: Monte Carlo opponent modelling and game-theoretic baselines."""

__version__ = "0.1.0"
