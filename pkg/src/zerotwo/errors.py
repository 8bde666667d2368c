"""Exception hierarchy shared by all modules."""


class ZeroTwoError(Exception):
    """Base class for every error raised by the package."""


class InvalidInput(ZeroTwoError, ValueError):
    pass


class NumericalFailure(ZeroTwoError, ArithmeticError):
    pass


class TracePreservationViolated(InvalidInput):
    def __init__(self, defect: float):
        super().__init__(f"sum of K*K deviates from identity by {defect:.3e}")
        self.defect = defect


class CommutationViolated(ZeroTwoError):
    def __init__(self, i, j, defect: float):
        super().__init__(f"maps {i} and {j} do not commute (defect {defect:.3e})")
        self.i = i
        self.j = j
        self.defect = defect


class IdentityResidualExceeded(ZeroTwoError):
    def __init__(self, which: str, residual: float, tol: float):
        super().__init__(f"{which} residual {residual:.3e} exceeds {tol:.1e}")
        self.which = which
        self.residual = residual


class PremiseViolated(ZeroTwoError):
    """A hypothesis of an experiment failed; ``which`` names it."""

    def __init__(self, which: str, detail: str = ""):
        msg = which if not detail else f"{which}: {detail}"
        super().__init__(msg)
        self.which = which
        self.detail = detail


class SearchExhausted(ZeroTwoError):
    pass


class CenterCommutationViolated(ZeroTwoError):
    def __init__(self, atom_i, atom_j, magnitude: float):
        super().__init__(
            f"map couples atoms {atom_i!r} and {atom_j!r} (magnitude {magnitude:.3e})"
        )
        self.atom_i = atom_i
        self.atom_j = atom_j
        self.magnitude = magnitude


class InvalidTrace(ZeroTwoError, ValueError):
    pass
