"""Command-line driver for multiplier_lab."""
from multiplier_lab.cli.main import main

__all__ = ["main"]
