"""Desk-scale Monte Carlo acceptance runs."""
