"""Exception hierarchy shared by the model, controller and CLI."""


class PamError(Exception):
    """Base class for every error raised by pamflat."""


class ValidationError(PamError, ValueError):
    """A parameter set or configuration violates a model invariant."""


class ConfigError(PamError):
    """The configuration file could not be parsed."""


class ModelError(PamError):
    """A model evaluation left its certified domain."""


class SingularDenominatorError(ModelError):
    pass


class DegenerateGainError(ModelError):
    pass


class NonPositiveVolumeError(ModelError):
    pass


class NearSingularError(ModelError):
    pass


class InfeasibleWindowError(ModelError):
    def __init__(self, f_min, f_max, idx_min, idx_max):
        self.f_min = f_min
        self.f_max = f_max
        self.idx_min = idx_min
        self.idx_max = idx_max
        super().__init__(
            f"infeasible force window: max lower bound {f_min:.6g} N (muscle {idx_min}) "
            f"> min upper bound {f_max:.6g} N (muscle {idx_max})"
        )


class UnreachableFlowError(ModelError):
    """Requested mass flow is outside what the valve can deliver at this pressure.

    ``v_boundary`` is the saturated voltage the caller should fall back to.
    """

    def __init__(self, q_desired, v_boundary, message=None):
        self.q_desired = q_desired
        self.v_boundary = v_boundary
        super().__init__(message or f"unreachable flow {q_desired:.6g} kg/s (clamp to {v_boundary:.6g} V)")


class ValveInversionError(ModelError):
    pass


class HorizonError(ModelError):
    pass


class DivergenceError(ModelError):
    pass
