"""Shared exception hierarchy; the CLI maps each class to an exit code."""


class GentnowError(Exception):
    """Base class for all package errors."""


class ConfigError(GentnowError):
    """Invalid run configuration or missing inputs."""


class IngestError(GentnowError):
    """Input files that cannot be read or violate their schema."""


class ComputationError(GentnowError):
    """A model or statistic was asked for something it cannot compute."""
