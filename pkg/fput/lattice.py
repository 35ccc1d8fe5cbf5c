"""
Physical-space β-FPUT chain: parameters, state, forces and energy
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, Field

from fput.errors import ConfigurationError

logger = logging.getLogger(__name__)


class LatticeParams(BaseModel):
    """Physical parameters of one periodic chain"""
    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=4)
    m: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    kappa: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    beta: float = Field(default=0.0, ge=0, allow_inf_nan=False)

    @property
    def betaN(self) -> float:
        return self.beta * self.N

    @classmethod
    def from_beta_n(cls, N: int, betaN: float, kappa: float = 1.0, m: float = 1.0) -> "LatticeParams":
        """β is always derived from the control parameter βN"""
        return cls(N=N, m=m, kappa=kappa, beta=betaN / N)

    def with_beta(self, beta: float) -> "LatticeParams":
        return self.model_copy(update={"beta": beta})


@dataclass(frozen=True)
class ChainState:
    """Displacements q and momenta p (p = m dq/dt) at time t"""
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def validate(self, params: LatticeParams) -> "ChainState":
        if self.q.shape != (params.N,) or self.p.shape != (params.N,):
            raise ConfigurationError(
                f"State shapes q{self.q.shape}, p{self.p.shape} do not match N={params.N}"
            )
        return self

    @classmethod
    def at_rest(cls, params: LatticeParams) -> "ChainState":
        return cls(q=np.zeros(params.N), p=np.zeros(params.N), t=0.0)


@njit(cache=True, nogil=True)
def force_kernel(q, out, kappa, beta):
    """Spring forces with periodic neighbours, written into out"""
    n = q.shape[0]
    for j in range(n):
        right = q[(j + 1) % n] - q[j]
        left = q[j] - q[(j - 1) % n]
        out[j] = kappa * (right - left) + beta * (right * right * right - left * left * left)


def acceleration(state: ChainState, params: LatticeParams) -> np.ndarray:
    state.validate(params)
    forces = np.empty(params.N)
    force_kernel(np.ascontiguousarray(state.q, dtype=np.float64), forces, params.kappa, params.beta)
    return forces / params.m


def _bond_stretch(q: np.ndarray) -> np.ndarray:
    return np.roll(q, -1) - q


def harmonic_energy(state: ChainState, params: LatticeParams) -> float:
    state.validate(params)
    d = _bond_stretch(state.q)
    return float(np.sum(state.p ** 2) / (2 * params.m) + 0.5 * params.kappa * np.sum(d ** 2))


def hamiltonian_physical(state: ChainState, params: LatticeParams) -> float:
    """Total energy: kinetic + harmonic springs + (β/4)Σ(q_{j+1}-q_j)^4"""
    d = _bond_stretch(state.validate(params).q)
    return harmonic_energy(state, params) + 0.25 * params.beta * float(np.sum(d ** 4))


def total_momentum(state: ChainState) -> float:
    return float(np.sum(state.p))


def fundamental_period(params: LatticeParams) -> float:
    """T_f = 2π/ω(1); close to N when κ = m = 1"""
    omega_1 = 2.0 * math.sqrt(params.kappa / params.m) * abs(math.sin(math.pi / params.N))
    return 2.0 * math.pi / omega_1
