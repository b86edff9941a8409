"""Exception hierarchy shared by every chaoskit module."""


class ChaosKitError(Exception):
    """Base class for all library errors."""


class NumericalFailure(ChaosKitError):
    """Raised when a numerical procedure cannot deliver a trustworthy result."""


class InvalidState(ChaosKitError, ValueError):
    pass


class DegenerateParameter(ChaosKitError, ValueError):
    pass


class InvalidConfig(ChaosKitError, ValueError):
    pass


class Diverged(NumericalFailure):
    def __init__(self, t, message=None):
        self.t = float(t)
        super().__init__(message or f"trajectory left the divergence radius at t={self.t:.6g}")


class StiffnessFailure(NumericalFailure):
    pass


class NoEvent(ChaosKitError):
    pass


class TangentialCrossing(NumericalFailure):
    pass


class UndefinedAtEquilibrium(ChaosKitError, ValueError):
    pass


class UndefinedTorsion(ChaosKitError, ValueError):
    pass


class InvalidBox(ChaosKitError, ValueError):
    pass


class InsufficientCrossings(NumericalFailure):
    def __init__(self, found, wanted, reason=""):
        self.found = found
        self.wanted = wanted
        msg = f"only {found} of {wanted} section crossings found"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class SparseMap(ChaosKitError):
    pass


class AmbiguousSymbol(ChaosKitError, ValueError):
    pass


class UnknownSymbol(ChaosKitError, KeyError):
    pass


class NonGenericProjection(NumericalFailure):
    pass


class Mismatch(ChaosKitError, ValueError):
    pass


class ConvergenceFailure(NumericalFailure):
    pass
