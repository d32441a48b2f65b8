"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Missing, unknown, or malformed configuration key/value."""


class NonPhysicalLinkError(ValueError):
    """Link-budget parameters yield a round-trip transmissivity above one."""


class DegenerateLinkError(ValueError):
    """Link-budget parameters underflow to a zero transmissivity."""


class NonPhysicalChannelError(ValueError):
    """Channel has spectral norm above one and cannot act as a passive channel."""


class ProtocolMismatchError(ValueError):
    """Channel shape is incompatible with the requested protocol."""


class NonUnitaryInputError(ValueError):
    """Matrix handed to the mesh decomposition is not unitary."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(
            f"input matrix is not unitary: max-entry residual {residual:.3e}"
        )


class NonPhysicalTransformError(ValueError):
    """Signal/noise map pair violates the commutator-preservation condition."""
