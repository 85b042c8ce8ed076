"""Physical parameters of the KdV-Burgers shock and the Galilean frame change.

The flux is fixed to ``f(u) = u**2 / 2``.  Every downstream module works in
the normalized frame where the wave speed vanishes and the end states are
``u_minus = s``, ``u_plus = -s``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

#: Upper bound of the viscosity-dominated (monotone) regime for the ratio
#: ``delta * (u_minus - u_plus) / (2 * epsilon**2)``.
MONOTONE_RATIO_MAX = 0.25


class Regime(str, enum.Enum):
    MONOTONE = "monotone"
    OSCILLATORY = "oscillatory"


class ParameterError(ValueError):
    """Raised when shock parameters violate a structural constraint."""


class RegimeError(ValueError):
    """Raised when an operation needs the monotone regime but is not given one."""


def rankine_hugoniot(u_minus: float, u_plus: float) -> float:
    """Speed of the shock joining ``u_minus`` to ``u_plus`` for Burgers flux."""
    if not u_minus > u_plus:
        raise ParameterError(f"need u_minus > u_plus, got u_minus={u_minus}, u_plus={u_plus}")
    return 0.5 * (u_minus + u_plus)


@dataclass(frozen=True)
class ShockParams:
    epsilon: float
    delta: float
    u_minus: float
    u_plus: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ParameterError(f"viscosity epsilon must be > 0, got {self.epsilon}")
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise ParameterError(f"dispersion delta must be >= 0, got {self.delta}")
        if not (math.isfinite(self.u_minus) and math.isfinite(self.u_plus)):
            raise ParameterError("end states must be finite")
        if not self.u_minus > self.u_plus:
            raise ParameterError(
                f"need u_minus > u_plus (Lax shock), got u_minus={self.u_minus}, "
                f"u_plus={self.u_plus}")

    @property
    def s(self) -> float:
        return 0.5 * (self.u_minus - self.u_plus)

    @property
    def sigma(self) -> float:
        return 0.5 * (self.u_minus + self.u_plus)

    @property
    def regime_ratio(self) -> float:
        return self.delta * (self.u_minus - self.u_plus) / (2.0 * self.epsilon ** 2)

    @property
    def regime(self) -> Regime:
        # 4*delta*s <= epsilon**2 is the same test without the division
        if 4.0 * self.delta * self.s <= self.epsilon ** 2:
            return Regime.MONOTONE
        return Regime.OSCILLATORY

    @property
    def is_monotone(self) -> bool:
        return self.regime is Regime.MONOTONE

    @property
    def is_normalized(self) -> bool:
        return self.u_minus == -self.u_plus

    def require_monotone(self, what: str = "this operation") -> None:
        if not self.is_monotone:
            raise RegimeError(
                f"{what} needs the monotone regime delta*(u_minus-u_plus)/(2*epsilon^2) <= 1/4, "
                f"got ratio {self.regime_ratio:.6g}")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out.update(s=self.s, sigma=self.sigma, regime_ratio=self.regime_ratio,
                   regime=self.regime.value)
        return out


def make_params(epsilon: float, delta: float, u_minus: float, u_plus: float) -> ShockParams:
    return ShockParams(float(epsilon), float(delta), float(u_minus), float(u_plus))


def normalized_params(epsilon: float, delta: float, s: float) -> ShockParams:
    """Parameters already in the standing frame ``u_minus = s = -u_plus``."""
    return make_params(epsilon, delta, s, -s)


def params_for_ratio(ratio: float, epsilon: float = 1.0, s: float = 1.0) -> ShockParams:
    """Normalized parameters with a prescribed regime ratio ``delta*s/epsilon**2``."""
    return normalized_params(epsilon, ratio * epsilon ** 2 / s, s)


@dataclass(frozen=True)
class GalileanTransform:
    """Frame change ``v(t, y) = u(t, y + shift_speed*t) - level_shift``.

    For Burgers flux the two numbers coincide (both equal the shock speed);
    they are kept apart so the record reads unambiguously.
    """

    shift_speed: float
    level_shift: float

    @property
    def is_identity(self) -> bool:
        return self.shift_speed == 0.0 and self.level_shift == 0.0

    def to_moving(self, x, t: float = 0.0):
        """Map lab coordinates to the co-moving coordinate ``y``."""
        return np.asarray(x, dtype=float) - self.shift_speed * t

    def to_lab(self, y, t: float = 0.0):
        return np.asarray(y, dtype=float) + self.shift_speed * t

    def normalize_state(self, u):
        return np.asarray(u, dtype=float) - self.level_shift

    def restore_state(self, v):
        return np.asarray(v, dtype=float) + self.level_shift

    def restore_params(self, params: ShockParams) -> ShockParams:
        return make_params(params.epsilon, params.delta,
                           params.u_minus + self.level_shift,
                           params.u_plus + self.level_shift)

    def restore_profile(self, profile_eval, x, t: float = 0.0):
        """Evaluate a normalized-frame profile callable in the lab frame."""
        u, du = profile_eval(self.to_moving(x, t))
        return self.restore_state(u), du


def galilean_normalize(params: ShockParams) -> tuple[ShockParams, GalileanTransform]:
    sigma, s = params.sigma, params.s
    # build from s so the normalized states are exactly symmetric
    normalized = make_params(params.epsilon, params.delta, s, -s)
    return normalized, GalileanTransform(shift_speed=sigma, level_shift=sigma)


def restore(params: ShockParams, transform: GalileanTransform) -> ShockParams:
    return transform.restore_params(params)
