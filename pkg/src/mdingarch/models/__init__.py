"""Distribution kernels, parameter containers, filters and simulation."""
