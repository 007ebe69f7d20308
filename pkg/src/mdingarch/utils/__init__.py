"""Input/output helpers for the command line."""
