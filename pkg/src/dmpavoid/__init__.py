"""Obstacle avoidance for DMP-encoded policies with learned coupling parameters."""

__version__ = "0.1.0"
