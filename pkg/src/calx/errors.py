"""Exception hierarchy shared by all calx modules."""


class CalxError(Exception):
    pass


# --- formulas ---------------------------------------------------------------

class FormulaError(CalxError):
    pass


class ParseError(FormulaError):
    """Rejected input text. Carries the offset and what would have been legal."""

    def __init__(self, message, pos=None, expected=None):
        super().__init__(message)
        self.pos = pos
        self.expected = tuple(expected) if expected else ()

    def __str__(self):
        base = super().__str__()
        if self.pos is not None:
            base += f" (at position {self.pos})"
        if self.expected:
            base += "; expected one of: " + ", ".join(self.expected)
        return base


class SortError(FormulaError):
    pass


class UnknownIdentifier(FormulaError):
    def __init__(self, name, pos=None):
        super().__init__(f"unknown identifier '{name}'")
        self.name = name
        self.pos = pos


class InvalidPath(CalxError):
    pass


# --- evaluation / oracle ----------------------------------------------------

class EvaluationUndefined(CalxError):
    """A state fell outside the modeled finite domain (bad index, div by 0,
    empty MAX/MIN range)."""


class BudgetExceeded(CalxError):
    pass


class Abort(CalxError):
    """Guarded if with no true guard."""


class FuelExhausted(CalxError):
    pass


# --- tactics ----------------------------------------------------------------

class TacticError(CalxError):
    pass


class UnknownTactic(TacticError):
    pass


class ParamValidation(TacticError):
    pass


class Inapplicable(TacticError):
    pass


class SideConditionFailed(TacticError):
    def __init__(self, label, verdict, message=None):
        super().__init__(message or f"side condition '{label}' not discharged: {verdict}")
        self.label = label
        self.verdict = verdict


class NameClash(TacticError):
    pass


class ConstNotPresent(TacticError):
    pass


class NotAConjunction(TacticError):
    pass


class NoSuchObligation(TacticError):
    pass


class UnboundMetaVar(TacticError):
    pass


class ChainBroken(TacticError):
    def __init__(self, frame_index, step_index, message=None):
        super().__init__(message or f"frame {frame_index} step {step_index} no longer checks")
        self.frame_index = frame_index
        self.step_index = step_index


class MetaVarNotAllowed(TacticError):
    pass


# --- derivation tree / persistence -------------------------------------------

class TreeError(CalxError):
    pass


class UnknownNode(TreeError):
    pass


class FormatError(TreeError):
    pass


class ReplayMismatch(TreeError):
    pass
