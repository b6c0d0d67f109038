"""Configuration and parameter models for distal-lab."""
