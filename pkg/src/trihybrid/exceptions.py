"""Exception types raised by the trihybrid package."""


class InvalidConfigError(ValueError):
    """A configuration value is outside its admissible range."""


class DimensionError(ValueError):
    """Array lengths do not agree with the array geometry."""


class DegenerateBeamformerError(ValueError):
    """The beamformer (or problem) has zero energy where a ratio is needed."""


class EnumerationTooLargeError(ValueError):
    """An exhaustive search would exceed its configured size cap."""
