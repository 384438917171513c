"""Truncated multiplier operators and mixed-norm estimation."""
