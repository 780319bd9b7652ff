"""DDPG portfolio management with daily rebalancing, per-share costs and classical baselines."""

__version__ = "0.1.0"
