"""Exception hierarchy. Every failure raised by the library derives from CenterKitError."""


class CenterKitError(Exception):
    pass


# linalg
class NotConjugate(CenterKitError):
    pass


class NotCollinear(CenterKitError):
    pass


class ZeroMap(CenterKitError):
    pass


class NotInFamily(CenterKitError):
    pass


# fields
class InvalidSpec(CenterKitError, ValueError):
    pass


class MissingGradient(CenterKitError):
    pass


# flow
class StepFailure(CenterKitError):
    pass


class Escape(CenterKitError):
    pass


class NoReturn(CenterKitError):
    pass


# polar
class OriginHasNoAngle(CenterKitError, ValueError):
    pass


class NotOriginPreserving(CenterKitError):
    pass


class JetNotScalar(CenterKitError):
    pass


class NotZInvariant(CenterKitError):
    pass


class NotFlat(CenterKitError):
    pass


# shift
class VanishingImage(CenterKitError):
    pass


class OrientationReversing(CenterKitError):
    pass


class SingularIntegrand(CenterKitError):
    pass


class NotPTC(CenterKitError):
    pass


class NotOrbitPreserving(CenterKitError):
    pass


# jets
class NotDivisible(CenterKitError):
    pass


class DegeneratePoint(CenterKitError):
    pass
