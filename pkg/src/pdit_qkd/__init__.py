"""pdit-qkd: private-state distillation analysis of noisy-processed QKD."""

__version__ = "0.1.0"
