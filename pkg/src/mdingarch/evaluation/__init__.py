"""Calibration and sign-forecast evaluation."""
