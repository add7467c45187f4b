from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ._validation import ParameterError, check_open_unit, check_positive


@dataclass(frozen=True)
class ChannelParams:
    """Overt rate, server rate, horizon, covertness and reliability targets."""

    rate: float
    horizon: float
    epsilon: float
    zeta: float = 0.1
    mu: Optional[float] = None

    def __post_init__(self):
        check_positive("rate", self.rate)
        check_positive("horizon", self.horizon)
        check_open_unit("epsilon", self.epsilon)
        check_open_unit("zeta", self.zeta)
        if self.mu is not None:
            check_positive("mu", self.mu)

    def require_queue(self) -> float:
        """Service rate for timing scenarios, which need mu > rate."""
        if self.mu is None:
            raise ParameterError("mu is required for timing scenarios")
        if not self.mu > self.rate:
            raise ParameterError(f"mu must exceed rate, got mu={self.mu}, rate={self.rate}")
        return self.mu
