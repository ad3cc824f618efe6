"""Exception types shared across backends."""


class ConfigError(ValueError):
    """Invalid run configuration. Carries the list of violations."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class NumericalError(RuntimeError):
    """A propagation produced an unusable result."""


class ResolutionError(NumericalError):
    """The phase-space grid does not resolve the field (tail or aliasing)."""


class InstabilityError(NumericalError):
    """Norm blow-up during time stepping."""
