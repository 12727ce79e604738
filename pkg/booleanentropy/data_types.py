from enum import Enum


# points in the upper half-plane are plain python complex numbers
ComplexValue = complex


class MeasureKind(Enum):
    ATOMIC = "atomic"
    GRID = "grid"
    EMPIRICAL = "empirical"

    @staticmethod
    def from_text(name: str) -> 'MeasureKind':
        for kind in MeasureKind:
            if kind.value == name.lower():
                return kind
        raise ValueError(f"Unknown measure type '{name}'! Use one of {[k.value for k in MeasureKind]}.")


class RateName(Enum):
    ISYM = "isym"
    I = "i"  # noqa: E741
    I1 = "i1"
    JPLUS = "jplus"
    JTILDE = "jtilde"
    JGAMMA = "jgamma"
    IALPHA = "ialpha"
    IGAMMAV = "igammav"
    IPAIR = "pair"

    @staticmethod
    def from_text(name: str) -> 'RateName':
        for rate in RateName:
            if rate.value == name.lower():
                return rate
        raise ValueError(f"Unknown rate function '{name}'! Use one of {[r.value for r in RateName]}.")


class LawKind(Enum):
    RADEMACHER = "rademacher"
    MU_HALF = "mu-half"
    SEMICIRCLE = "semicircle"
    MARCHENKO_PASTUR = "mp"
    P_ALPHA = "p-alpha"
    GAUSSIAN = "gaussian"

    @property
    def is_atomic(self) -> bool:
        return self in (LawKind.RADEMACHER, LawKind.MU_HALF)

    @staticmethod
    def from_text(name: str) -> 'LawKind':
        for kind in LawKind:
            if kind.value == name.lower():
                return kind
        raise ValueError(f"Unknown law '{name}'! Use one of {[k.value for k in LawKind]}.")


class ModelKind(Enum):
    WISHART_BLOCK = "wishart-block"
    CONDITIONED_GUE = "cond-gue"

    @staticmethod
    def from_text(name: str) -> 'ModelKind':
        if name.lower() == ModelKind.WISHART_BLOCK.value:
            return ModelKind.WISHART_BLOCK
        elif name.lower() == ModelKind.CONDITIONED_GUE.value:
            return ModelKind.CONDITIONED_GUE
        else:
            raise ValueError(f"Unknown model '{name}'!")


class Suite(Enum):
    MONOTONICITY = "monotonicity"
    EULER_LAGRANGE = "euler-lagrange"
    CONVERGENCE = "convergence"
    WEIGHT_RATIO = "weight-ratio"
    MAXIMALITY = "maximality"
    ALPHA_REGIME = "alpha-regime"

    @staticmethod
    def from_text(name: str) -> 'Suite':
        for suite in Suite:
            if suite.value == name.lower():
                return suite
        raise ValueError(f"Unknown verification suite '{name}'!")


class Status(Enum):
    OK = 0
    ERROR = 1
