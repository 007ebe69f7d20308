"""Residual autocorrelation diagnostics and portmanteau tests."""
