"""Exception types shared across the toolkit."""


class CartanKitError(Exception):
    """Base class for all toolkit errors."""


# --- linear algebra layer ---

class NonSquareMatrix(CartanKitError):
    pass


class DimensionOverflow(CartanKitError):
    pass


class NotASubalgebra(CartanKitError):
    pass


class NumericalRankAmbiguity(CartanKitError):
    pass


class NotAbelian(CartanKitError):
    pass


class SeedOutsideAlgebra(CartanKitError):
    pass


# --- groupoid layer ---

class UnknownUnit(CartanKitError):
    pass


class UnknownArrow(CartanKitError):
    pass


class NotASubgroupoid(CartanKitError):
    pass


# --- twist layer ---

class TwistMismatch(CartanKitError):
    pass


class DegreeMismatch(CartanKitError):
    pass


class FactorizationPropertyFails(CartanKitError):
    pass


# --- inclusion layer ---

class OutsideAmbient(CartanKitError):
    pass


class NotANormalizer(CartanKitError):
    pass


class NotRegular(CartanKitError):
    pass


class NotInvariant(CartanKitError):
    pass


class NonUniquePseudoExpectation(CartanKitError):
    pass


# --- weyl / envelope layer ---

class NotInDomain(CartanKitError):
    pass


class NoConditionalExpectation(CartanKitError):
    pass


class SourceVanishes(CartanKitError):
    pass


class NotComposable(CartanKitError):
    pass


class NotCovering(CartanKitError):
    pass


class CoverNotCertified(CartanKitError):
    pass


class NotNested(CartanKitError):
    pass


class EnvelopeAbsent(CartanKitError):
    pass


# --- I/O layer ---

class ParseError(CartanKitError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column
