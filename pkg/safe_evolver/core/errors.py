from typing import Iterable


class SafeEvolverError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class UsageError(SafeEvolverError, ValueError):
    pass


class ConfigError(SafeEvolverError, ValueError):
    pass


class FsmFormatError(SafeEvolverError, ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class FsmSyntaxError(FsmFormatError):
    pass


class FsmSemanticError(FsmFormatError):
    pass


class CompositionError(SafeEvolverError, ValueError):
    def __init__(self, missing: Iterable[str] = (), extra: Iterable[str] = (), where: str = "alphabets"):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        parts = []
        if self.missing:
            parts.append(f"missing {', '.join(self.missing)}")
        if self.extra:
            parts.append(f"extra {', '.join(self.extra)}")
        super().__init__(f"{where} mismatch: {'; '.join(parts)}")


class PropertySyntaxError(SafeEvolverError, ValueError):
    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"position {position}: {message}")


class PropertyModelMismatchError(SafeEvolverError, ValueError):
    def __init__(self, atom: str, known: Iterable[str] = ()):
        self.atom = atom
        known = sorted(known)
        hint = f" (known: {', '.join(known)})" if known else ""
        super().__init__(f"unknown atomic proposition '{atom}'{hint}")
