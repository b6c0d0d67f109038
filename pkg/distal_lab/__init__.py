"""Top-level package for the distal-lab numerical laboratory."""

from .commands.experiments import run_experiment

__all__ = ["run_experiment"]
