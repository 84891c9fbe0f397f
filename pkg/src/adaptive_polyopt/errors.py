"""Exception types shared across the package."""


class InvalidSpecError(ValueError):
    """A problem instance or operand violates a declared invariant."""


class ConfigError(ValueError):
    """A run configuration failed schema validation.

    ``messages`` holds one human-readable line per offending field.
    """

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class RunAbortError(RuntimeError):
    """A simulation produced a non-finite or divergent quantity."""

    def __init__(self, step: int, detail: str):
        self.step = step
        self.detail = detail
        super().__init__(f"run aborted at step {step}: {detail}")


class OracleFailureError(RuntimeError):
    """A finite-difference oracle evaluated to a non-finite value."""
