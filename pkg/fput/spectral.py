"""
Fourier and normal-mode representation of the chain.

Conventions: forward DFT carries the 1/N factor, the zero mode is discarded
(ω(0) = 0 makes a_0 undefined), and signed wavenumbers only ever enter through
the sign function ι, which is odd and 2N-periodic.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from fput.errors import ConfigurationError, ConsistencyError
from fput.lattice import ChainState, LatticeParams

logger = logging.getLogger(__name__)

ModeIndex = Union[int, np.ndarray]

ADOT_MAX_N = 128
IMAG_RESIDUE_TOL = 1e-8


@dataclass(frozen=True)
class SpectralField:
    """Normal-mode amplitudes a_k for k = 1..N-1 (a[k-1] holds a_k)"""
    a: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.a.ndim != 1 or self.a.shape[0] < 3:
            raise ConfigurationError(f"Mode vector must be 1-D with N-1 >= 3 entries, got {self.a.shape}")
        if not np.all(np.isfinite(self.a)):
            raise ConfigurationError("Mode amplitudes must be finite")

    @property
    def N(self) -> int:
        return self.a.shape[0] + 1

    def padded(self) -> np.ndarray:
        """Length-N array indexed by wavenumber, with a_0 = 0"""
        full = np.zeros(self.N, dtype=np.complex128)
        full[1:] = self.a
        return full

    @classmethod
    def from_padded(cls, full: np.ndarray, t: float = 0.0) -> "SpectralField":
        return cls(a=np.asarray(full[1:], dtype=np.complex128), t=t)


def dft(values: np.ndarray) -> np.ndarray:
    """X_k = (1/N) Σ_j x_j exp(-i2πkj/N)"""
    values = np.asarray(values)
    if values.shape[0] < 4:
        raise ConfigurationError(f"DFT needs N >= 4 samples, got {values.shape[0]}")
    return np.fft.fft(values) / values.shape[0]


def idft(coefficients: np.ndarray) -> np.ndarray:
    """Inverse of dft: x_j = Σ_k X_k exp(+i2πkj/N)"""
    coefficients = np.asarray(coefficients)
    return np.fft.ifft(coefficients) * coefficients.shape[0]


def wavenumbers(N: int) -> np.ndarray:
    return np.arange(1, N)


def dispersion(k: ModeIndex, params: LatticeParams) -> Union[float, np.ndarray]:
    """ω(k) = 2 sqrt(κ/m) |sin(πk/N)|"""
    omega = 2.0 * math.sqrt(params.kappa / params.m) * np.abs(np.sin(np.pi * np.asarray(k) / params.N))
    return float(omega) if np.ndim(omega) == 0 else omega


def iota(x: ModeIndex, N: int) -> Union[int, np.ndarray]:
    """sgn sin(πx/N), evaluated in integer arithmetic so that x ≡ 0 (mod N) gives exactly 0"""
    r = np.mod(np.asarray(x, dtype=np.int64), 2 * N)
    sign = np.where(r % N == 0, 0, np.where(r < N, 1, -1))
    return int(sign) if sign.ndim == 0 else sign


def interaction_T(k1: ModeIndex, k2: ModeIndex, k3: ModeIndex, k4: ModeIndex,
                  params: LatticeParams) -> Union[float, np.ndarray]:
    """T_{1,2,3,4}; arguments may be signed, e.g. interaction_T(k1, -k2, k3, k4) for T_{1,-2,3,4}"""
    N = params.N
    k2, k3, k4 = (np.asarray(k, dtype=np.int64) for k in (k2, k3, k4))
    sign = iota(k2 + k3 + k4, N) * iota(k2, N) * iota(k3, N) * iota(k4, N)
    amplitude = np.sqrt(dispersion(k1, params) * dispersion(k2, params)
                        * dispersion(k3, params) * dispersion(k4, params))
    value = -0.75 / params.kappa ** 2 * sign * amplitude
    return float(value) if np.ndim(value) == 0 else value


def discarded_zero_mode(state: ChainState) -> Tuple[float, float]:
    """Magnitudes of Q_0 and P_0, the components dropped by to_normal_modes"""
    return float(abs(np.mean(state.q))), float(abs(np.mean(state.p)))


def to_normal_modes(state: ChainState, params: LatticeParams) -> SpectralField:
    state.validate(params)
    Q = dft(state.q)[1:]
    P = dft(state.p)[1:]
    m_omega = params.m * dispersion(wavenumbers(params.N), params)
    a = (math.sqrt(2.0) / 2.0) * (np.sqrt(m_omega) * Q + 1j * P / np.sqrt(m_omega))
    q0, p0 = discarded_zero_mode(state)
    if q0 or p0:
        logger.debug(f"Discarding zero mode |Q_0|={q0:.3e}, |P_0|={p0:.3e} at t={state.t:.6g}")
    return SpectralField(a=a, t=state.t)


def from_normal_modes(field: SpectralField, params: LatticeParams) -> ChainState:
    """Invert a_k = (√2/2)[(mω)^½ Q_k + i(mω)^-½ P_k] using the pair (a_k, a*_{N-k})"""
    N = params.N
    if field.N != N:
        raise ConfigurationError(f"Field has N={field.N}, params have N={N}")
    a = field.padded()
    reflected = np.conj(a[(-np.arange(N)) % N])
    m_omega = np.zeros(N)
    m_omega[1:] = params.m * dispersion(wavenumbers(N), params)

    Q = np.zeros(N, dtype=np.complex128)
    P = np.zeros(N, dtype=np.complex128)
    root = np.sqrt(m_omega[1:])
    Q[1:] = (a[1:] + reflected[1:]) / (math.sqrt(2.0) * root)
    P[1:] = -1j * root * (a[1:] - reflected[1:]) / math.sqrt(2.0)

    q = idft(Q)
    p = idft(P)
    scale = max(1.0, float(np.max(np.abs(q))), float(np.max(np.abs(p))))
    residue = max(float(np.max(np.abs(q.imag))), float(np.max(np.abs(p.imag))))
    if residue > IMAG_RESIDUE_TOL * scale:
        raise ConsistencyError(f"Inverse transform left imaginary residue {residue:.3e}")
    return ChainState(q=q.real.copy(), p=p.real.copy(), t=field.t)


def wave_action(field: SpectralField) -> np.ndarray:
    return np.abs(field.a) ** 2


def mode_energies(field: SpectralField, params: LatticeParams) -> np.ndarray:
    """ω_k |a_k|^2; their sum is the harmonic energy per site"""
    return dispersion(wavenumbers(field.N), params) * wave_action(field)


def pair_grid(N: int) -> Tuple[np.ndarray, np.ndarray]:
    """All (k2, k3) with k2, k3 in 1..N-1, flattened"""
    k2, k3 = np.meshgrid(wavenumbers(N), wavenumbers(N), indexing="ij")
    return k2.ravel(), k3.ravel()


def adot_rhs(field: SpectralField, params: LatticeParams) -> np.ndarray:
    """
    Right-hand side of i da_k/dt, evaluated as the four constrained sums.

    Reference implementation with O(N^3) cost; k4 is fixed by each delta.
    """
    N = params.N
    if N > ADOT_MAX_N:
        raise ConfigurationError(f"adot_rhs is a reference kernel limited to N <= {ADOT_MAX_N}, got {N}")
    a = field.padded()
    ac = np.conj(a)
    k2, k3 = pair_grid(N)
    rhs = np.zeros(N - 1, dtype=np.complex128)

    for index, k1 in enumerate(wavenumbers(N)):
        k4 = np.mod(k1 - k2 - k3, N)
        total = np.sum(interaction_T(k1, k2, k3, k4, params) * a[k2] * a[k3] * a[k4])

        k4 = np.mod(k1 + k2 - k3, N)
        total += 3.0 * np.sum(interaction_T(k1, -k2, k3, k4, params) * ac[k2] * a[k3] * a[k4])

        k4 = np.mod(k2 - k1 - k3, N)
        total += 3.0 * np.sum(interaction_T(k1, -k2, k3, k4, params) * a[k2] * ac[k3] * ac[k4])

        k4 = np.mod(-k1 - k2 - k3, N)
        total += np.sum(interaction_T(k1, k2, k3, k4, params) * ac[k2] * ac[k3] * ac[k4])

        rhs[index] = total

    omega = dispersion(wavenumbers(N), params)
    return omega * field.a + (params.beta / 3.0) * rhs
