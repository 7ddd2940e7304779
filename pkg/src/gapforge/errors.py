"""Domain errors shared across the package.

Errors that correspond to structured, expected outcomes (a search that ran out
of budget, a cursor hitting an eigenvalue modulus) are distinct classes so the
CLI can map them to exit code 2, while genuine usage errors stay ValueError.
"""


class GapforgeError(Exception):
    """Base class for structured domain errors."""


class BudgetExceeded(GapforgeError):
    """An enumeration (product sets, orbit balls, word lists) hit its budget."""


class MixedFactor(GapforgeError):
    """A Q-irreducible factor of the characteristic polynomial has eigenvalue
    moduli on both sides of the cursor and the Hensel tier is disabled."""


class CursorOnEigenvalue(GapforgeError):
    """Some eigenvalue modulus equals the cursor omega exactly."""


class InseparableAtTolerance(GapforgeError):
    """Two eigenvalue-modulus enclosures still overlap at maximum precision."""


class HypothesisViolated(GapforgeError):
    """The weighted-sum hypothesis s <= C*e of the place-selection lemma fails."""


class PositionUnreachable(GapforgeError):
    """Weak general position could not be reached within the search cap;
    the input subspaces likely contain an invariant subspace."""

    def __init__(self, cap, message=None):
        self.cap = cap
        super().__init__(message or f"weak general position unreachable within S^{cap}")


class NotInPosition(GapforgeError):
    """The conjugated subspace families are not distinct / in weak general position."""


class NoContraction(GapforgeError):
    """C_k^2 * alpha_omega >= 1, so no power n can satisfy the ping-pong condition."""


class NotFound(GapforgeError):
    """The certificate search exhausted its budget.  Carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class Inconclusive(GapforgeError):
    """A bounded falsification search ended without a verdict."""

    def __init__(self, k_max):
        self.k_max = k_max
        super().__init__(f"inconclusive after k_max={k_max}")
