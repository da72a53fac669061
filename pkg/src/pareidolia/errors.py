"""Exception types shared across the package.

Every error raised on purpose derives from PareidoliaError so callers can
catch domain failures without swallowing programming errors.
"""


class PareidoliaError(Exception):
    pass


class DomainError(PareidoliaError):
    """An argument is outside its mathematical domain (e.g. t not in [0, 1])."""


class ContractError(PareidoliaError):
    """Structurally invalid input: wrong shape, wrong count, broken invariant."""


class SingularFitError(PareidoliaError):
    """The fitting system is rank deficient."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class AlignmentError(PareidoliaError):
    """Landmark alignment cannot be computed (degenerate configuration)."""


class SchemaError(PareidoliaError):
    """A boundary schema references landmarks or roles that do not exist."""


class MappingError(PareidoliaError):
    """Controller transfer cannot match source and target branches."""


class DivisionGuardError(PareidoliaError):
    """A reference coordinate sits too close to the frame origin to divide by."""


class ParseError(PareidoliaError):
    """A structured text document failed to parse.

    line / col are 1-based when known, None otherwise.
    """

    def __init__(self, message, line=None, col=None):
        super().__init__(message)
        self.line = line
        self.col = col


class ValidationError(PareidoliaError):
    """A parsed document violates its schema."""


class FlowFormatError(PareidoliaError):
    """A dense flow blob has a bad magic, header, or length."""


class StageError(PareidoliaError):
    """A pipeline stage failed; carries the stage name for reporting."""

    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
