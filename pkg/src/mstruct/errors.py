"""Exception hierarchy.

Every error carries the CLI exit code of its failure class:
2 for bad input data, 3 for bad configuration or usage, 4 for solver failure.
"""


class MstructError(Exception):
    exit_code = 1

    @property
    def name(self):
        return type(self).__name__


class InputError(MstructError, ValueError):
    exit_code = 2


class ConfigError(MstructError, ValueError):
    exit_code = 3


class SolverError(MstructError, RuntimeError):
    exit_code = 4


# file format / volume model
class BadMagic(InputError):
    pass


class HeaderParse(InputError):
    pass


class PayloadSizeMismatch(InputError):
    pass


class LabelOutOfRange(InputError):
    pass


class IoFailure(InputError):
    pass


class IndexOutOfRange(ConfigError):
    pass


# shape / kind checks between inputs
class DimMismatch(InputError):
    pass


class KindMismatch(InputError):
    pass


class NotPhase(InputError):
    pass


class NotBinary(InputError):
    pass


class EmptyPhase(InputError):
    pass


class NoValidPairs(InputError):
    pass


class ImageSmallerThanWindow(InputError):
    pass


# parameter problems
class BadSpec(ConfigError):
    pass


class BadPhase(ConfigError):
    pass


class LagTooLarge(ConfigError):
    pass


class WindowTooLarge(ConfigError):
    pass


class MixedShapes(ConfigError):
    pass


class NotNormalized(ConfigError):
    pass


class NonFinite(ConfigError):
    pass


class SizeMismatch(ConfigError):
    pass


class NotDistribution(ConfigError):
    pass


class DomainViolation(ConfigError):
    pass


class EmptyBatch(ConfigError):
    pass


class ShapeMismatch(ConfigError):
    pass


class NegativeClip(ConfigError):
    pass


class SolverDiverged(SolverError):
    pass
