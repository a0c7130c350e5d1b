"""Exception types shared across the package."""


class AfcError(Exception):
    """Base class for all errors raised by afc."""


class ConfigError(AfcError, ValueError):
    pass


class PoissonConvergenceError(AfcError, RuntimeError):
    """Pressure solve did not reach the requested residual."""

    def __init__(self, message, residual, history=()):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual
        self.history = list(history)


class DivergenceError(AfcError, FloatingPointError):
    """Non-finite values appeared in the flow state."""

    def __init__(self, step, field_name):
        super().__init__(f"non-finite values in {field_name!r} at step {step}")
        self.step = step
        self.field_name = field_name


class LayoutError(AfcError, ValueError):
    def __init__(self, index, message):
        super().__init__(f"probe {index}: {message}")
        self.index = index


class ActionRangeError(AfcError, ValueError):
    pass


class SetupError(AfcError, RuntimeError):
    pass


class LifecycleError(AfcError, RuntimeError):
    pass


class InputError(AfcError, ValueError):
    pass


class FramingError(AfcError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class ProtocolError(AfcError, RuntimeError):
    pass


class WorkerError(AfcError, RuntimeError):
    """A rollout worker crashed or timed out; the episode is discarded."""

    def __init__(self, cfd_id, last_step, cause=None):
        super().__init__(f"worker {cfd_id} failed after step {last_step}: {cause!r}")
        self.cfd_id = cfd_id
        self.last_step = last_step
        self.cause = cause


class UpdateAbortedError(AfcError, FloatingPointError):
    pass
