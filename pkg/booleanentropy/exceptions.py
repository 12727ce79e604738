from typing import Any, List, Optional


class InvalidMeasureError(ValueError):
    pass


class DomainError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


class SingularTransformError(NumericalError):
    pass


class InversionFailureError(NumericalError):
    def __init__(self, message: str, partial: Optional[List[Any]] = None):
        super().__init__(message)
        self.partial: List[Any] = partial or []


class VerificationFailure(NumericalError):
    pass


class SentinelWarning(RuntimeWarning):
    @staticmethod
    def msg(functional: str, reason: str) -> str:
        return f"{functional} is infinite: {reason}. Returning the signed sentinel."


class MixingWarning(RuntimeWarning):
    @staticmethod
    def msg(model: str, sweeps: int, proposal_sd: float) -> str:
        return (f"{model}: no proposal was accepted in {sweeps} sweeps after burn-in "
                f"(proposal_sd={proposal_sd:.3g}); the returned state is the initial one of the sampling phase.")


class MonotonicityWarning(RuntimeWarning):
    @staticmethod
    def msg(t_prev: float, t_next: float, drop: float) -> str:
        return f"Entropy curve decreases between t={t_prev:g} and t={t_next:g} by {drop:.3g}."
