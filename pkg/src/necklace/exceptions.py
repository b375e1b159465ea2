"""Error types; the CLI maps them to exit codes."""


class CertificationError(RuntimeError):
    """A spectral non-resonance condition failed or was contradicted."""


class ResonanceError(CertificationError):
    """A discrete operator has an eigenvalue too close to zero."""


class ConvergenceError(RuntimeError):
    """An iteration hit its cap or diverged; ``state`` holds the last iterate."""

    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state
