"""Exception types raised by the operator-algebra routines."""


class OpAlgError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(OpAlgError, ValueError):
    pass


class NotPSD(OpAlgError):
    pass


class Inconsistent(OpAlgError):
    pass


class Underdetermined(OpAlgError):
    def __init__(self, msg, nullity=0):
        super().__init__(msg)
        self.nullity = nullity


class NotInCommutant(OpAlgError):
    pass


class NotInSpace(OpAlgError):
    pass


class DegenerateInput(OpAlgError):
    pass


class DegenerateRep(OpAlgError):
    pass


class NonFaithful(OpAlgError):
    pass


class NotConditionalExpectation(OpAlgError):
    pass


class NotCompatible(OpAlgError):
    pass


class AxiomFailure(OpAlgError):
    pass


class CaseViolated(OpAlgError):
    pass


class NonCommuting(OpAlgError):
    pass


class PreconditionFailed(OpAlgError):
    def __init__(self, condition, residual=None):
        msg = f"precondition failed: {condition}"
        if residual is not None:
            msg += f" (residual {residual:.3e})"
        super().__init__(msg)
        self.condition = condition
        self.residual = residual


class NotBAlgebra(OpAlgError):
    pass


class NotMorphism(OpAlgError):
    pass


class NotCP(OpAlgError):
    pass


class NotSpatiallyImplemented(OpAlgError):
    pass


class EmptyFiber(OpAlgError):
    pass


class ClosureNotStabilized(OpAlgError):
    pass
