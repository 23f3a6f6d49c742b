"""Exception hierarchy.

Two families: ``InputError`` for data that violates a precondition (the CLI
maps these to exit status 2) and ``ComputationError`` for numerical
procedures that could not reach a trustworthy answer (exit status 1).
"""


class CurveboundError(Exception):
    """Base class for all library errors."""

    code = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        out.update({k: _jsonable(v) for k, v in self.details.items()})
        return out


def _jsonable(value):
    try:
        import numpy as np

        if isinstance(value, np.ndarray):
            return value.tolist()
        if isinstance(value, np.generic):
            return value.item()
    except ImportError:  # pragma: no cover
        pass
    return value


class InputError(CurveboundError, ValueError):
    code = "invalid-input"


class ComputationError(CurveboundError, RuntimeError):
    code = "computation-failed"


class InvalidInputError(InputError):
    code = "invalid-input"


class SingularProjectionError(InputError):
    code = "singular-projection"


class DegenerateCircleError(InputError):
    code = "degenerate-circle"


class DegenerateTranslationError(InputError):
    code = "degenerate-translation"


class MembershipError(InputError):
    code = "not-a-member"


class InvalidSpaceError(InputError):
    code = "invalid-space"


class NotInHullError(InputError):
    code = "not-in-hull"


class NoHemisphereError(InputError):
    code = "no-hemisphere"


class NotApplicableError(InputError):
    code = "not-applicable"


class ObstructionError(InputError):
    code = "obstruction"


class NotAntipodalError(InputError):
    code = "not-antipodal"


class InvalidPathError(InputError):
    code = "invalid-path"


class InvalidFamilyError(InputError):
    code = "invalid-family"


class ResolutionError(ComputationError):
    code = "resolution"


class SolveFailureError(ComputationError):
    code = "solve-failure"


class AnomalyError(ComputationError):
    code = "anomaly"


class UnclassifiableError(ComputationError):
    code = "unclassifiable-by-rotation-number"
