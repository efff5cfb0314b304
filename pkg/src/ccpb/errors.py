"""Exception hierarchy shared by every module of the toolkit."""


class CCPBError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(CCPBError):
    """One or more model parameters violate their constraints.

    ``violations`` holds one ``(code, message)`` pair per failed check so
    callers see every problem at once instead of the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{code}: {text}" for code, text in self.violations)
        super().__init__(msg)

    @property
    def codes(self):
        return [code for code, _ in self.violations]


class NonPositiveParameter(ParameterError):
    pass


class DielectricNotPositive(ParameterError):
    pass


class InvalidDimension(ParameterError):
    pass


class MeshError(CCPBError):
    pass


class DegenerateSpec(MeshError):
    pass


class MeshTooLarge(MeshError):
    pass


class LengthMismatch(MeshError):
    pass


class SolverError(CCPBError):
    pass


class NonFiniteState(SolverError):
    pass


class NewtonDiverged(SolverError):
    def __init__(self, message, eps=None):
        super().__init__(message)
        self.eps = eps


class SingularLinearSystem(SolverError):
    pass


class OutOfDomain(CCPBError):
    pass


class AsymptoticsError(CCPBError):
    pass


class EqualConcentrations(AsymptoticsError):
    pass


class MalformedQuery(AsymptoticsError):
    pass


class NonPositiveGamma(AsymptoticsError):
    pass


class DiagnosticsError(CCPBError):
    pass


class KappaOutOfRange(DiagnosticsError):
    pass


class DegenerateDenominator(DiagnosticsError):
    pass


class InsufficientData(DiagnosticsError):
    pass


class ConfigError(CCPBError):
    pass


class ConfigParse(ConfigError):
    pass


class UnknownSubcommand(ConfigError):
    pass
