"""Entry-point for running distal-lab experiments from a checkout."""

from __future__ import annotations

from distal_lab.commands.cli import main

if __name__ == "__main__":
    main()
