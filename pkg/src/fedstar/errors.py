"""Exception types shared across the package."""


class StructureError(ValueError):
    """Operands do not live over the same variables, chart or Weyl context."""


class HbarFloorError(ArithmeticError):
    """An operation produced an hbar exponent below -1.

    The global Laurent floor is -1; anything lower is a hard error rather
    than a silent truncation.
    """


class OrderOverflowError(ValueError):
    """A differential-operator word exceeds the configured order cap."""


class GaugeObstruction(Exception):
    """Two connections cannot be conjugated into each other.

    Carries the first grading degree at which the curvature forms differ.
    """

    def __init__(self, degree, detail=""):
        self.degree = degree
        self.detail = detail
        msg = f"gauge obstruction at degree {degree}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
