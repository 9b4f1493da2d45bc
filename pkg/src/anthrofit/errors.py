"""Exception hierarchy. Every domain failure raises an AnthrofitError subclass;
the CLI maps them to exit status 1."""


class AnthrofitError(Exception):
    """Base class for all domain errors raised by this package."""


# ---- asset loading -------------------------------------------------------

class MagicMismatch(AnthrofitError):
    pass


class VersionUnsupported(AnthrofitError):
    pass


class TensorShapeMismatch(AnthrofitError):
    pass


class InvariantViolation(AnthrofitError):
    pass


# ---- numerics / shapes ---------------------------------------------------

class DimensionMismatch(AnthrofitError):
    pass


class NonFiniteInput(AnthrofitError):
    pass


# ---- measuring -----------------------------------------------------------

class UnknownLandmark(AnthrofitError):
    pass


class EmptyIntersection(AnthrofitError):
    pass


class DegeneratePlane(AnthrofitError):
    pass


# ---- sampling / statistics -----------------------------------------------

class TooFewSamples(AnthrofitError):
    pass


# ---- regressor training ---------------------------------------------------

class DivergenceDetected(AnthrofitError):
    pass


class NoConvergence(AnthrofitError):
    pass


class GenderMismatch(AnthrofitError):
    pass


class InvalidConfig(AnthrofitError):
    pass


# ---- inverse kinematics ----------------------------------------------------

class UnknownRegressor(AnthrofitError):
    pass


class NonFiniteLoss(AnthrofitError):
    pass


class TooFewKeypoints(AnthrofitError):
    pass


# ---- metrics / reports -----------------------------------------------------

class IndexOutOfRange(AnthrofitError):
    pass


class FrameIdMismatch(AnthrofitError):
    pass


class KeypointCountMismatch(AnthrofitError):
    pass


class TopologyMismatch(AnthrofitError):
    pass


class NoPresentFrames(AnthrofitError):
    pass
