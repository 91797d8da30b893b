"""Exception hierarchy shared by all pipeline stages."""


class RobopaintError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(RobopaintError, ValueError):
    pass


class DegenerateTangentError(RobopaintError, ValueError):
    """The curve derivative vanishes where a direction was requested."""


class ShapeError(RobopaintError, ValueError):
    pass


class NoResidualError(RobopaintError):
    """Raised by the stroke proposer when the canvas already equals the target."""


class InfeasibleKError(RobopaintError, ValueError):
    pass


class UnquantizedInputError(RobopaintError, ValueError):
    pass


class InvalidSampleError(RobopaintError, ValueError):
    pass


class LayoutError(RobopaintError, ValueError):
    pass


class DegenerateRigidBodyError(RobopaintError, ValueError):
    pass


class InvalidSegmentError(RobopaintError, ValueError):
    pass


class DomainError(RobopaintError, ValueError):
    pass


class InvalidDatasetError(RobopaintError, ValueError):
    pass


class FormatError(RobopaintError, ValueError):
    """A file did not match its expected on-disk format."""
