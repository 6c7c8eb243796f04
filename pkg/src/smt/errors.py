"""Exception hierarchy.  Every engine error carries its spec-facing name in ``code``."""


class SMTError(Exception):
    code = "SMTError"


class IllFormed(SMTError):
    code = "IllFormed"


class OverlappingGroup(SMTError):
    code = "OverlappingGroup"


class NotSameGroup(SMTError):
    code = "NotSameGroup"


class UndefinedFreeNames(SMTError):
    code = "UndefinedFreeNames"


class SubstUndefined(SMTError):
    code = "SubstUndefined"


class HoleEquivalenceViolation(SMTError):
    code = "HoleEquivalenceViolation"


class ArityMismatch(SMTError):
    code = "ArityMismatch"


class OpaqueClassDescent(SMTError):
    code = "OpaqueClassDescent"


class NotDecomposable(SMTError):
    code = "NotDecomposable"


class AmbiguousParse(SMTError):
    code = "AmbiguousParse"


class NoParse(SMTError):
    code = "NoParse"


class NoLeastFixpoint(SMTError):
    code = "NoLeastFixpoint"


class UnknownSet(SMTError):
    code = "UnknownSet"


class IllTypedCondition(SMTError):
    code = "IllTypedCondition"


class DuplicateSetName(SMTError):
    code = "DuplicateSetName"


class SpecSyntaxError(SMTError):
    """Raised by the DSL reader; ``span`` locates the offending text."""

    code = "SyntaxError"

    def __init__(self, message, span=None):
        super().__init__(message)
        self.span = span

    def __str__(self):
        msg = super().__str__()
        if self.span is not None:
            return f"{self.span}: {msg}"
        return msg
