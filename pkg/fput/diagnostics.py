"""
Resonant and non-resonant quartic content of the Hamiltonian.

    S1 = Σ T_{1,2,3,4}  (a1* a2 a3 a4 + c.c.)     δ(k1 - k2 - k3 - k4)
    S2 = Σ 3/2 T_{1,-2,3,4} a1* a2* a3 a4           δ(k1 + k2 - k3 - k4)
    S3 = Σ 1/4 T_{1,2,3,4}  (a1* a2* a3* a4* + c.c.) δ(k1 + k2 + k3 + k4)

On each delta manifold ι(±k2 + k3 + k4) reduces to (-1)^w, with w the winding
of the exact wavenumber sum. With c_k = sqrt(ω_k) a_k and
f_j = Σ_k c_k exp(iπk(2j+1)/N), the half-shifted grid turns that sign into a
phase, so every sum is a fourth moment of f over j:

    S1 = -3/(4κ²) · 2 Re <f* f³>,  S2 = 9/(8κ²) <|f|⁴>,  S3 = 3/(8κ²) Re <f⁴>

where <·> is the mean over j = 0..N-1.
"""
import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence, Tuple

import numpy as np

from fput.errors import ConfigurationError, DegenerateDenominatorError
from fput.lattice import LatticeParams
from fput.spectral import SpectralField, dispersion, interaction_T, pair_grid, wavenumbers

logger = logging.getLogger(__name__)

BRUTE_MAX_N = 64

# With this normalization of T, the physical quartic energy per site is (β/3)(S1 + S2 + S3).
QUARTIC_SCALE = 1.0 / 3.0


@dataclass(frozen=True)
class QuarticSums:
    S1: complex
    S2: complex
    S3: complex
    method: Literal["brute", "fft"]

    def as_real(self) -> Tuple[float, float, float]:
        return float(np.real(self.S1)), float(np.real(self.S2)), float(np.real(self.S3))


@dataclass(frozen=True)
class SumSample:
    """One point of the sample stream fed to ratio_r"""
    t: float
    sums: QuarticSums
    energy: float = math.nan


@dataclass(frozen=True)
class RatioEstimate:
    r: float
    S1_mean: float
    S2_mean: float
    S3_mean: float
    n_samples: int
    spread: float


def quartic_sums_brute(field: SpectralField, params: LatticeParams) -> QuarticSums:
    """Direct evaluation over (k1, k2, k3) with k4 fixed by each delta"""
    N = params.N
    if N > BRUTE_MAX_N:
        raise ConfigurationError(f"Brute-force sums are limited to N <= {BRUTE_MAX_N}, got {N}")
    a = field.padded()
    ac = np.conj(a)
    k2, k3 = pair_grid(N)
    S1 = S2 = S3 = 0j

    for k1 in wavenumbers(N):
        k4 = np.mod(k1 - k2 - k3, N)
        z = ac[k1] * a[k2] * a[k3] * a[k4]
        S1 += np.sum(interaction_T(k1, k2, k3, k4, params) * (z + np.conj(z)))

        k4 = np.mod(k1 + k2 - k3, N)
        S2 += 1.5 * np.sum(interaction_T(k1, -k2, k3, k4, params) * ac[k1] * ac[k2] * a[k3] * a[k4])

        k4 = np.mod(-k1 - k2 - k3, N)
        z = ac[k1] * ac[k2] * ac[k3] * ac[k4]
        S3 += 0.25 * np.sum(interaction_T(k1, k2, k3, k4, params) * (z + np.conj(z)))

    return QuarticSums(complex(S1), complex(S2), complex(S3), "brute")


def _shifted_field(field: SpectralField, params: LatticeParams) -> np.ndarray:
    N = params.N
    c = np.zeros(N, dtype=np.complex128)
    k = wavenumbers(N)
    c[1:] = np.sqrt(dispersion(k, params)) * field.a * np.exp(1j * np.pi * k / N)
    return np.fft.ifft(c) * N


def quartic_sums_fft(field: SpectralField, params: LatticeParams) -> QuarticSums:
    """O(N log N) evaluation of the same three sums"""
    if field.N != params.N:
        raise ConfigurationError(f"Field has N={field.N}, params have N={params.N}")
    f = _shifted_field(field, params)
    f2 = f * f
    scale = 0.75 / params.kappa ** 2
    S1 = -scale * 2.0 * np.real(np.mean(np.conj(f) * f * f2))
    S2 = 1.5 * scale * np.mean(np.abs(f2) ** 2)
    S3 = 0.5 * scale * np.real(np.mean(f2 * f2))
    return QuarticSums(complex(S1), complex(S2), complex(S3), "fft")


def quadratic_energy(field: SpectralField, params: LatticeParams) -> float:
    return float(np.sum(dispersion(wavenumbers(field.N), params) * np.abs(field.a) ** 2))


def hamiltonian_spectral(field: SpectralField, params: LatticeParams) -> float:
    """Energy per site, H/N, from the normal modes"""
    S1, S2, S3 = quartic_sums_fft(field, params).as_real()
    return quadratic_energy(field, params) + QUARTIC_SCALE * params.beta * (S1 + S2 + S3)


def _window_means(stream: Sequence[SumSample], window: Tuple[float, float]) -> Tuple[np.ndarray, int]:
    start, end = window
    inside = [s.sums.as_real() for s in stream if start <= s.t <= end]
    if not inside:
        raise ConfigurationError(f"No samples inside the averaging window {window}")
    return np.mean(np.array(inside), axis=0), len(inside)


def _ratio(S1: float, S2: float, S3: float) -> float:
    if abs(S2) < 1e-14 * max(abs(S1), abs(S3)) or S2 == 0:
        raise DegenerateDenominatorError(f"Averaged resonant sum S2={S2:.3e} is degenerate")
    return abs((S1 + S3) / S2)


def ratio_r(streams: Sequence[Sequence[SumSample]], window: Tuple[float, float]) -> RatioEstimate:
    """
    Average-then-ratio estimate of r = |(<S1> + <S3>) / <S2>|

    Each stream is one ensemble member. Sums are averaged uniformly over the
    samples inside the window, then across ensembles; spread is the
    across-ensemble standard deviation of the per-ensemble r.
    """
    if not streams:
        raise ConfigurationError("ratio_r needs at least one ensemble")
    per_ensemble = []
    n_samples = 0
    for stream in streams:
        means, count = _window_means(stream, window)
        per_ensemble.append(means)
        n_samples += count
    per_ensemble = np.array(per_ensemble)

    S1, S2, S3 = (float(x) for x in np.mean(per_ensemble, axis=0))
    r = _ratio(S1, S2, S3)
    if len(per_ensemble) > 1:
        spread = float(np.std([_ratio(*row) for row in per_ensemble], ddof=1))
    else:
        spread = 0.0
    return RatioEstimate(r=r, S1_mean=S1, S2_mean=S2, S3_mean=S3, n_samples=n_samples, spread=spread)


def linear_trend(times: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of values against times"""
    slope, _ = np.polyfit(np.asarray(times, dtype=float), np.asarray(values, dtype=float), 1)
    return float(slope)
