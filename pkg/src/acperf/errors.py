class AcperfError(ValueError):
    """Base class for validation failures raised by acperf."""


class MatrixFormatError(AcperfError):
    """A performance-matrix or scenario file does not validate."""


class ReplicateCapError(AcperfError):
    """An allocation asks for more runs on an instance than the matrix stores."""


class HypothesisError(AcperfError):
    """A bound was evaluated outside the conditions it is proven under."""
