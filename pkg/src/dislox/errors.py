"""Exception hierarchy shared by all modules."""


class DisloxError(Exception):
    """Base class for every error raised by the package."""


class MeshSyntaxError(DisloxError):
    """Malformed ``dmesh`` document; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TopologyError(DisloxError):
    """Dangling references, inverted or non-conforming elements."""


class GeometryError(DisloxError):
    """Fault, interface or boundary geometry violates the model assumptions."""


class DomainError(DisloxError):
    """Argument outside the domain of an operation (point off the fault, unknown region)."""


class ConfigError(DisloxError):
    """Invalid configuration; optionally located by section, key and line."""

    def __init__(self, message, section=None, key=None, line=None):
        self.section, self.key, self.line = section, key, line
        where = []
        if section is not None:
            where.append(f"[{section}]")
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{' '.join(where)}: {message}"
        super().__init__(message)


class AssemblyError(DisloxError):
    """Degenerate element met during assembly."""


class SolveError(DisloxError):
    """Linear or interface solver failure (stagnation, indefiniteness, singularity)."""


class InvariantError(DisloxError):
    """A data invariant does not hold (e.g. nonzero slip on the fault boundary)."""


class DimensionError(DisloxError):
    """Array shapes or sample sets do not match."""


class NonConvergence(UserWarning):
    """Emitted when an iterative reconstruction stops without meeting its tolerance."""
