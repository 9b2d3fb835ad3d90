"""Phenomenological parameter sets for the scramblon echo theory.

Conventions: the scramblon propagator is -e^{kappa t}/C, so only the
combinations gamma_I, gamma_c and the exponent kappa enter the closed
forms; the propagator normalization C is optional metadata.  Times are
in units of 1/J unless a `time_unit` tag says otherwise (metadata only).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import DomainError


@dataclass(frozen=True)
class ScramblonParams:
    """Parameters of the multi-round echo closed forms.

    kappa    : Lyapunov exponent (1/time).
    gamma_I  : incoherent error strength (dimensionless).
    gamma_c  : coherent error strength (dimensionless).
    delta_O  : effective scaling dimension of the probe operator.
    delta_d  : effective scaling dimension of the error operator.
    b        : shape constant of the error-operator ansatz.
    C        : optional scramblon propagator normalization; only ratios
               e^{kappa t}/C enter, so it is stored but never required.

    The error-ansatz prefactor C0 is not a free parameter: it is fixed
    to Ybar/(2 b delta_d) by the normalization f_err'(0) = -Ybar, which
    makes the short-time two-round echo reduce to f_O(4 gamma_c e^{kt}).
    """

    kappa: float
    gamma_I: float = 0.0
    gamma_c: float = 0.0
    delta_O: float = 1.0
    delta_d: float = 2.0
    b: float = 1.0
    C: Optional[float] = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if self.gamma_I < 0:
            raise DomainError(f"gamma_I must be nonnegative, got {self.gamma_I}")
        if self.gamma_c < 0:
            raise DomainError(f"gamma_c must be nonnegative, got {self.gamma_c}")
        if not self.delta_O > 0:
            raise DomainError(f"delta_O must be positive, got {self.delta_O}")
        if not self.delta_d > 0:
            raise DomainError(f"delta_d must be positive, got {self.delta_d}")
        if not self.b > 0:
            raise DomainError(f"b must be positive, got {self.b}")

    @classmethod
    def with_syk_relations(cls, kappa, gamma_I=0.0, gamma_c=0.0, delta_O=1.0,
                           C=None) -> "ScramblonParams":
        """Apply the solvable-model relations delta_d = 2*delta_O, b = 1."""
        return cls(kappa=kappa, gamma_I=gamma_I, gamma_c=gamma_c,
                   delta_O=delta_O, delta_d=2.0 * delta_O, b=1.0, C=C)

    @property
    def gamma_total(self) -> float:
        return self.gamma_I + self.gamma_c


@dataclass(frozen=True)
class AnsatzFunction:
    """Monotone map x >= 0 -> (0, 1] generating the scattering-vertex family.

    The standard form is (1 + b x)^(-2 delta); a user-supplied callable
    may replace it provided it keeps f(0) = 1 and decreases to 0.
    """

    delta: float
    b: float = 1.0
    form: str = "standard"
    fn: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not self.b > 0:
            raise DomainError(f"b must be positive, got {self.b}")
        if self.form == "standard":
            if self.fn is not None:
                raise DomainError("standard form takes no custom callable")
        elif self.form == "custom":
            if self.fn is None:
                raise DomainError("custom form requires a callable")
            f0 = float(self.fn(0.0))
            if abs(f0 - 1.0) > 1e-12:
                raise DomainError(f"custom ansatz must satisfy f(0)=1, got {f0}")
            probe = [self.fn(x) for x in (0.5, 1.0, 10.0, 1e4)]
            if any(b >= a for a, b in zip([f0] + probe[:-1], probe)):
                raise DomainError("custom ansatz must be strictly decreasing")
        else:
            raise DomainError(f"unknown ansatz form {self.form!r}")

    def __call__(self, x):
        from . import scramblon  # local import to avoid a cycle

        if self.form == "standard":
            return scramblon.f_ansatz(x, self.delta, self.b)
        return self.fn(x)

    def taylor_coefficient(self, m: int) -> float:
        """Vertex amplitude for emitting m scramblons (standard form only)."""
        from . import scramblon

        if self.form != "standard":
            raise NotImplementedError("vertex coefficients require the standard form")
        return scramblon.vertex_coefficient(m, self.delta) * self.b ** m
