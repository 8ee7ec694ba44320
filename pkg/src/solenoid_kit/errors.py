"""Exception hierarchy shared by every module of the kit."""


class SolenoidKitError(Exception):
    """Base class for all errors raised by solenoid_kit."""


class ConfigError(SolenoidKitError):
    pass


# dynamics
class EmptyWord(SolenoidKitError):
    pass


class InvalidPoint(SolenoidKitError):
    pass


class BranchOutOfRange(SolenoidKitError):
    pass


# transfer
class ResolutionMismatch(SolenoidKitError):
    pass


class NoConvergence(SolenoidKitError):
    def __init__(self, maxit, residual):
        super().__init__(
            f"power iteration did not converge in {maxit} iterations "
            f"(last residual {residual:.3e})")
        self.maxit = maxit
        self.residual = residual


class ZeroWeight(SolenoidKitError):
    pass


class DimensionMismatch(SolenoidKitError):
    pass


class NotPSD(SolenoidKitError):
    pass


# solenoid
class LevelOutOfRange(SolenoidKitError):
    pass


class DepthExhausted(SolenoidKitError):
    pass


class NotHarmonic(SolenoidKitError):
    def __init__(self, residual):
        super().__init__(f"h0 is not harmonic (residual {residual:.3e})")
        self.residual = residual


class DominationFailure(SolenoidKitError):
    pass


# pathspace
class InvalidWord(SolenoidKitError):
    pass


class ZeroMass(SolenoidKitError):
    pass


class DeadEnd(SolenoidKitError):
    pass


class NotAnOrbit(SolenoidKitError):
    pass


# wavelet
class QuadratureUnderresolved(SolenoidKitError):
    pass


# multiplicity
class NegativeDetail(SolenoidKitError):
    def __init__(self, cell):
        super().__init__(f"induced multiplicity is below the input at cell {cell}")
        self.cell = cell
