"""Shared exception types."""


class TextkgError(Exception):
    """Base class for all package errors."""


class GraphParseError(TextkgError, ValueError):
    """Malformed line in a triples or descriptions file."""


class MissingDescriptionError(TextkgError, ValueError):
    """Triples reference entities that have no description entry."""

    def __init__(self, entities):
        self.entities = tuple(entities)
        super().__init__(
            "entities referenced by triples have no description: "
            + ", ".join(self.entities)
        )


class ContractError(TextkgError, ValueError):
    """A documented precondition was violated (shape, membership, scenario)."""


class ConfigError(TextkgError, ValueError):
    """Invalid configuration key or value."""


class NumericError(TextkgError, RuntimeError):
    """Non-finite value produced during a numeric computation."""


class TrainingError(TextkgError, RuntimeError):
    """Training aborted (non-finite loss or invalid training inputs)."""
