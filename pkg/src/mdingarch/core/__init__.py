"""Configuration, logging, errors and worker pools."""
