"""Command registration and experiment runners for distal-lab."""

from .cli import build_parser, main
from .experiments import emit_plotdata, run_experiment

__all__ = ["build_parser", "main", "emit_plotdata", "run_experiment"]
