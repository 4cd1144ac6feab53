"""Exception hierarchy. The CLI maps each class to an exit code."""


class SymprankError(Exception):
    """Base class."""


class ValidationError(SymprankError, ValueError):
    """Input fails a structural check (shape, symplecticity, positivity)."""


class NumericalError(SymprankError, ArithmeticError):
    """A numerical stage failed: eigenvalue pairing, leak budget, residual."""


class DegeneracyError(NumericalError):
    """Eigenvalues of i*sqrt(V) Omega sqrt(V) could not be paired."""


class LeakError(NumericalError):
    """Norm escaping the Fock truncation exceeded the leak budget."""

    def __init__(self, gate: str, leak: float, budget: float):
        self.gate, self.leak, self.budget = gate, leak, budget
        super().__init__(f"gate {gate!r} leaked {leak:.3e} of norm past the cutoff "
                         f"(budget {budget:.1e}); raise the cutoff")


class ResidualError(NumericalError):
    def __init__(self, msg: str, residual: float, **diag):
        self.residual = residual
        self.diagnostics = diag
        super().__init__(f"{msg} (residual {residual:.3e})")


class DomainError(SymprankError):
    """Mathematically undefined request: null output, infeasible cutoff, mixed input."""


class NullOutputError(DomainError):
    def __init__(self, msg: str = "circuit output is null"):
        super().__init__(msg)
