"""Stationarity analysis of the stability matrix."""
