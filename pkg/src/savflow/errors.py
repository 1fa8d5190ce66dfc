"""Exception types shared across the package."""


class SavflowError(Exception):
    """Base class for all savflow-specific errors."""


class GridMismatchError(SavflowError):
    """Two fields that must share a grid do not."""


class ConfigError(SavflowError):
    """Malformed or inconsistent configuration input."""


class EnergyShiftTooSmall(SavflowError):
    """E1 = integral(g) + c0 is not positive, so r = sqrt(E1) is undefined.

    Carries enough context to tell the user which shift would have been
    admissible.  The solver never re-shifts silently: changing c0 mid-run
    changes the modified energy being monitored.
    """

    def __init__(self, value, quad_g, c0, where=""):
        self.value = value
        self.quad_g = quad_g
        self.c0 = c0
        self.suggested_c0 = max(0.0, 1.0 - quad_g)
        self.where = where
        loc = f" ({where})" if where else ""
        super().__init__(
            f"E1 = integral(g) + c0 = {value:.6g} <= 0 with c0 = {c0:.6g}{loc}; "
            f"increase the shift, e.g. c0 >= {self.suggested_c0:.6g}"
        )


class NewtonSingularError(SavflowError):
    """|W'(xi)| fell below the safe-division threshold in the scalar update."""


class SingularScalarDenominator(SavflowError):
    """The closed-form scalar update of the first-order step lost solvability."""


class StepRatioError(SavflowError):
    """A step ratio exceeded the stability threshold under ratio_policy='error'."""


class NonFiniteFieldError(SavflowError):
    """A field picked up NaN/Inf values; reports the offending step."""

    def __init__(self, step_index, t):
        self.step_index = step_index
        self.t = t
        super().__init__(f"non-finite field values after step {step_index} (t = {t:.6g})")


class StepRatioWarning(UserWarning):
    """A step ratio exceeded the stability threshold under ratio_policy='warn'."""


class RatioCapConflictWarning(UserWarning):
    """The dt_min floor forced the adaptive controller past the ratio cap."""
