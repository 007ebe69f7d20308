"""Mixed Poisson QMLE, asymptotic covariance and dispersion."""
