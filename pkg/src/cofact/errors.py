"""Exception hierarchy shared across the toolkit."""


class CofactError(Exception):
    """Base class for every error raised by this package."""


class NormalizationError(CofactError):
    """An assert statement could not be flattened (e.g. unbalanced parens)."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class FrontendError(CofactError):
    """C parsing or extraction failed; carries parser diagnostics."""

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class ConfigurationError(CofactError):
    """Bad run configuration (unknown dialect, malformed solver template, ...)."""


class ToolMissingError(CofactError):
    """A required external tool (compiler, solver binary) is not available."""

    def __init__(self, tool: str, detail: str = ""):
        msg = f"required tool not found: {tool}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.tool = tool


class TraversalError(CofactError):
    """Assertion ordering failed (missing entry function)."""


class InconsistentRunError(CofactError):
    """An assertion id is in none of the result sets; orchestration bug."""


class GatewayError(CofactError):
    """Provider call failed after retries; carries the pipeline stage name."""

    def __init__(self, message: str, stage: str = ""):
        super().__init__(f"[{stage}] {message}" if stage else message)
        self.stage = stage


class ReplayMissError(GatewayError):
    """Replay mode hit an uncached prompt."""

    def __init__(self, key: str, stage: str = ""):
        super().__init__(f"no cached response for key {key}", stage)
        self.key = key


class PromptParseError(GatewayError):
    """A provider response did not match the expected shape; raw text attached."""

    def __init__(self, message: str, raw: str, stage: str = ""):
        super().__init__(message, stage)
        self.raw = raw


class SynthesisError(CofactError):
    """Program synthesis never produced a compiling program."""

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class AnnotationError(CofactError):
    """Annotation kept drifting from the input skeleton; diff attached."""

    def __init__(self, message: str, diff: str = ""):
        super().__init__(message)
        self.diff = diff


class BoundReductionError(CofactError):
    """Loop bounds could not be tightened below the unwind bound."""

    def __init__(self, message: str, offending: list[str] | None = None):
        super().__init__(message)
        self.offending = offending or []


class ConsistencyError(CofactError):
    """Internal invariant violated (e.g. fact position outside the skeleton)."""
