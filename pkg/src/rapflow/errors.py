"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (e.g. ``"sylvester-singular"``)
that the command-line front end echoes into reports.
"""


class RapFlowError(Exception):
    code = "rapflow-error"

    def __init__(self, message=None, code=None):
        if code is not None:
            self.code = code
        super().__init__(message or self.code)


class NumericalError(RapFlowError):
    """A numerical procedure failed (singular system, non-convergence, ...)."""

    code = "numerical-failure"


class SylvesterSingularError(NumericalError):
    code = "sylvester-singular"


class EigenNoConvergeError(NumericalError):
    code = "eigen-no-converge"


class EigenZeroViolation(NumericalError):
    code = "eigenzero-violation"


class PsiDivergedError(NumericalError):
    code = "psi-diverged"


class NotPositiveRecurrentError(NumericalError):
    code = "not-positive-recurrent"


class SingularZeroBlockError(NumericalError):
    code = "singular C0"


class ModelError(RapFlowError, ValueError):
    """The model definition itself is inconsistent."""

    code = "model-invalid"


class DimensionError(ModelError):
    code = "dimension-mismatch"


class SimulationError(RapFlowError):
    code = "simulation-failure"


class OrbitDegenerateError(SimulationError):
    code = "orbit-degenerate"


class InvalidIntensityError(SimulationError):
    code = "invalid-intensity"


class HoldingTimeOverflowError(SimulationError):
    code = "holding-time-overflow"
