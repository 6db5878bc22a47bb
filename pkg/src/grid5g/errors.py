"""Shared exception types."""


class ConfigError(ValueError):
    """A parameter is outside the range the model supports."""


class ScenarioError(ValueError):
    """A scenario failed validation; carries every violated invariant."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class BridgeProtocolError(RuntimeError):
    """The bridge peer broke the wire protocol."""
