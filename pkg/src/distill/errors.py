"""Exception hierarchy shared by all modules."""


class DistillError(Exception):
    """Base class for every error raised by this package."""


class BasisError(DistillError, ValueError):
    """Invalid basis parameters, occupation outside a basis, or mismatched bases."""


class NotHermitianError(DistillError, ValueError):
    pass


class ConvergenceError(DistillError, RuntimeError):
    pass


class NegativeEigenvalueError(DistillError, ValueError):
    """An operator expected to be positive semidefinite has a clearly negative eigenvalue."""


class IllPosedResonanceError(DistillError, ValueError):
    """A non-resonant eigenvalue sits within floating noise of a resonance."""


class DistillateAbsentError(DistillError, RuntimeError):
    """The success probability of a measurement step collapsed to zero."""

    def __init__(self, step, probability):
        self.step = step
        self.probability = probability
        super().__init__(
            f"success probability {probability:.3e} at step {step}: "
            "the initial state has no overlap with the distillate"
        )


class ConfigError(DistillError, ValueError):
    pass
