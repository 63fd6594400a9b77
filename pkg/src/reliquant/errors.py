"""Exception hierarchy shared by every reliquant module."""


class ReliquantError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ReliquantError, ValueError):
    """An argument, document or model violates its contract."""


class ParseError(ValidationError):
    """A text document could not be parsed.

    ``line`` and ``column`` are 1-based; either may be ``None`` when the
    problem is not tied to a position (e.g. a cycle spanning several lines).
    """

    def __init__(self, message, line=None, column=None, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
            if column is not None:
                where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class CutSetExplosionError(ReliquantError):
    """Minimal cut set expansion exceeded its configured cap."""


class TermLimitError(ReliquantError):
    """Inclusion-exclusion needs more terms than allowed; use RARE_EVENT."""


class UndefinedImportanceError(ReliquantError):
    """Fussell-Vesely importance requested on a tree whose top event has zero probability."""


class PredicateError(ReliquantError):
    """A user predicate raised while filtering an enumeration."""


class CampaignRuntimeError(ReliquantError):
    """A campaign could not run to completion (subject launch, protocol, resources)."""


class SubjectLaunchError(CampaignRuntimeError):
    pass


class ProtocolError(CampaignRuntimeError):
    pass


class NoClaimError(ReliquantError):
    """A campaign result carries neither a statistical claim nor an exhaustive certificate."""
