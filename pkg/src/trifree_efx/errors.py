"""Exception hierarchy shared by all modules."""


class TriFreeError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(TriFreeError):
    """Malformed input: bad instance/allocation payloads or files."""


class NotTriangleFreeError(TriFreeError):
    """The instance skeleton contains a triangle; the solver refuses it."""

    def __init__(self, triangle: tuple[int, int, int]):
        self.triangle = triangle
        super().__init__(
            f"skeleton contains a triangle on agents {triangle[0]}, "
            f"{triangle[1]}, {triangle[2]}"
        )


class StateError(TriFreeError):
    """A precondition on the solver state does not hold (caller error)."""


class InternalSolverError(TriFreeError):
    """An internal guarantee was broken; indicates a bug, not bad input."""


class SearchSpaceTooLargeError(TriFreeError):
    """A brute-force routine was asked to scan more states than its guard."""


class InconsistentSpecError(TriFreeError):
    """A generator spec cannot be realised (bad sizes, capacities, parity)."""
