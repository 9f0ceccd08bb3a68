"""Exception types shared across the package."""


class FtpushsumError(Exception):
    """Base class for protocol and numerical failures."""


class NotStronglyConnectedError(FtpushsumError):
    """The digraph does not admit a directed path between every node pair."""


class DegenerateTrajectoryError(FtpushsumError):
    """The recorded trajectories hit a measure-zero configuration.

    Raised when the two difference-Hankel scans disagree on the defect
    dimension.  The caller is expected to restart with fresh randomness.
    """


class ZeroDenominatorError(FtpushsumError):
    """A ratio or weight substitution needs a value that is (near) zero.

    Covers both the final-value denominator and the equivalent-execution
    weight construction; re-randomizing the run resolves it.
    """


class ProtocolError(FtpushsumError):
    """Round counters violate an identity the protocol guarantees."""
