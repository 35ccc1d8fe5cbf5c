"""
Normal-form transformation coefficients and their statistics.

The transformation removes the three non-resonant delta branches

    B1: k1 - k2 - k3 - k4 ≡ 0    A1 = -T_{1,2,3,4}  / (ω1 - ω2 - ω3 - ω4)
    B2: k1 - k2 + k3 + k4 ≡ 0    A2 = -T_{1,-2,3,4} / (ω1 - ω2 + ω3 + ω4)
    B3: k1 + k2 + k3 + k4 ≡ 0    A3 = -T_{1,2,3,4}  / (ω1 + ω2 + ω3 + ω4)

with all wavenumbers in 1..N-1. The integer value of each branch sum is a
multiple of N; its quotient (the winding) separates direct from Umklapp
quartets.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Literal, NamedTuple, Optional, Tuple

import numpy as np

from fput.errors import ConfigurationError, NonResonanceError
from fput.lattice import LatticeParams
from fput.spectral import SpectralField, dispersion, interaction_T, wavenumbers

logger = logging.getLogger(__name__)

NONRESONANCE_TOL = 1e-14
SCAN_MAX_N = 4096
WICK_MAX_N = 256
MONTE_CARLO_MAX_N = 64
TRANSFORM_MAX_N = 128
MONTE_CARLO_BLOCK = 256

EtaDistribution = Literal["complex-gaussian", "uniform-circle"]


class Branch(str, Enum):
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"


def branch_sum(branch: Branch, k1, k2, k3, k4):
    """Integer value of the branch's delta argument"""
    if branch is Branch.B1:
        return k1 - k2 - k3 - k4
    if branch is Branch.B2:
        return k1 - k2 + k3 + k4
    return k1 + k2 + k3 + k4


def solve_k4(branch: Branch, k1, k2, k3, N: int):
    """The k4 in 0..N-1 satisfying the branch's delta condition"""
    if branch is Branch.B1:
        return np.mod(k1 - k2 - k3, N)
    if branch is Branch.B2:
        return np.mod(k2 - k1 - k3, N)
    return np.mod(-k1 - k2 - k3, N)


@dataclass(frozen=True)
class QuartetKey:
    N: int
    k1: int
    k2: int
    k3: int
    k4: int
    branch: Branch

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch(self.branch))
        ks = (self.k1, self.k2, self.k3, self.k4)
        if any(not 0 < k < self.N for k in ks):
            raise ConfigurationError(f"Quartet {ks} has wavenumbers outside (0, {self.N})")
        if self.exact_sum % self.N != 0:
            raise ConfigurationError(
                f"Quartet {ks} violates the {self.branch.value} delta condition (sum {self.exact_sum})"
            )

    @property
    def exact_sum(self) -> int:
        return int(branch_sum(self.branch, self.k1, self.k2, self.k3, self.k4))

    @property
    def winding(self) -> int:
        return self.exact_sum // self.N

    @property
    def wavenumbers(self) -> Tuple[int, int, int, int]:
        return self.k1, self.k2, self.k3, self.k4


def _coefficients(branch: Branch, k1, k2, k3, k4, params: LatticeParams) -> Tuple[np.ndarray, np.ndarray]:
    """A and its denominator for arrays of quartets on one branch"""
    w1, w2, w3, w4 = (dispersion(k, params) for k in (k1, k2, k3, k4))
    if branch is Branch.B1:
        T = interaction_T(k1, k2, k3, k4, params)
        denominator = w1 - w2 - w3 - w4
    elif branch is Branch.B2:
        T = interaction_T(k1, -np.asarray(k2), k3, k4, params)
        denominator = w1 - w2 + w3 + w4
    else:
        T = interaction_T(k1, k2, k3, k4, params)
        denominator = w1 + w2 + w3 + w4

    denominator = np.asarray(denominator, dtype=np.float64)
    tolerance = NONRESONANCE_TOL * math.sqrt(params.kappa / params.m)
    small = np.abs(denominator) < tolerance
    if np.any(small):
        i = int(np.flatnonzero(small)[0])
        ks = np.broadcast_arrays(*(np.asarray(k) for k in (k1, k2, k3, k4)))
        quartet = tuple(int(k.ravel()[i]) for k in ks)
        bad = float(denominator.ravel()[i])
        logger.error(f"Non-resonance violated on {branch.value} at {quartet}: {bad:.3e}")
        raise NonResonanceError(quartet, branch.value, bad)
    return -np.asarray(T) / denominator, denominator


def coefficient_A(key: QuartetKey, params: LatticeParams) -> float:
    if key.N != params.N:
        raise ConfigurationError(f"Quartet built for N={key.N}, params have N={params.N}")
    A, _ = _coefficients(key.branch, key.k1, key.k2, key.k3, key.k4, params)
    return float(A)


def denominator_identity_check(key: QuartetKey, params: LatticeParams) -> Tuple[float, float]:
    """
    Compare ω1-ω2-ω3-ω4 with its sine-product factorization
    8 sqrt(κ/m) sin(π(k1-k2)/2N) sin(π(k1-k4)/2N) sin(π(k3-k1)/2N),
    valid when k1 = k2 + k3 + k4 without wrap-around
    """
    if key.branch is not Branch.B1 or key.exact_sum != 0:
        raise ConfigurationError(
            f"Factorization needs an exact B1 quartet with k1 = k2 + k3 + k4, got {key}"
        )
    N = params.N
    k1, k2, k3, k4 = key.wavenumbers
    w1, w2, w3, w4 = (dispersion(k, params) for k in key.wavenumbers)
    lhs = w1 - w2 - w3 - w4
    rhs = (8.0 * math.sqrt(params.kappa / params.m)
           * math.sin(math.pi * (k1 - k2) / (2 * N))
           * math.sin(math.pi * (k1 - k4) / (2 * N))
           * math.sin(math.pi * (k3 - k1) / (2 * N)))
    return lhs, rhs


@dataclass
class BranchTerms:
    """Every admissible (k2, k3, k4) for one k1 on one branch, with its coefficient"""
    branch: Branch
    k1: int
    k2: np.ndarray
    k3: np.ndarray
    k4: np.ndarray
    winding: np.ndarray
    A: np.ndarray
    denominator: np.ndarray

    def __len__(self) -> int:
        return self.A.shape[0]


def _iter_branch_blocks(k1: int, branch: Branch, params: LatticeParams,
                        block_rows: int = 256) -> Iterator[BranchTerms]:
    N = params.N
    ks = wavenumbers(N)
    for start in range(0, ks.shape[0], block_rows):
        k2, k3 = np.meshgrid(ks[start:start + block_rows], ks, indexing="ij")
        k2, k3 = k2.ravel(), k3.ravel()
        k4 = solve_k4(branch, k1, k2, k3, N)
        keep = k4 != 0
        k2, k3, k4 = k2[keep], k3[keep], k4[keep]
        A, denominator = _coefficients(branch, k1, k2, k3, k4, params)
        winding = branch_sum(branch, k1, k2, k3, k4) // N
        yield BranchTerms(branch, k1, k2, k3, k4, winding, A, denominator)


def branch_terms(N: int, k1: int, branch: Branch, params: Optional[LatticeParams] = None) -> BranchTerms:
    params = _params_for(N, params)
    blocks = list(_iter_branch_blocks(k1, branch, params))
    return BranchTerms(
        branch=branch,
        k1=k1,
        k2=np.concatenate([b.k2 for b in blocks]),
        k3=np.concatenate([b.k3 for b in blocks]),
        k4=np.concatenate([b.k4 for b in blocks]),
        winding=np.concatenate([b.winding for b in blocks]),
        A=np.concatenate([b.A for b in blocks]),
        denominator=np.concatenate([b.denominator for b in blocks]),
    )


def _params_for(N: int, params: Optional[LatticeParams]) -> LatticeParams:
    if params is None:
        return LatticeParams(N=N)
    if params.N != N:
        return params.model_copy(update={"N": N})
    return params


@dataclass
class BoundScanResult:
    N: int
    k1: int
    sums: Tuple[float, float, float]
    total: float
    normalized: float
    min_abs_denominator: float
    max_terms: Tuple[float, float, float]
    by_winding: Dict[Tuple[str, int], float] = field(default_factory=dict)


def scan_bound(N: int, k1: int, params: Optional[LatticeParams] = None) -> BoundScanResult:
    """Σ|A|^2 over each branch manifold for fixed k1; the total should stay ≲ N^2 log N"""
    if not 4 <= N <= SCAN_MAX_N:
        raise ConfigurationError(f"scan_bound supports 4 <= N <= {SCAN_MAX_N}, got {N}")
    if not 0 < k1 < N:
        raise ConfigurationError(f"k1={k1} outside (0, {N})")
    params = _params_for(N, params)

    sums = []
    max_terms = []
    by_winding: Dict[Tuple[str, int], float] = {}
    min_denominator = math.inf
    for branch in Branch:
        total = 0.0
        largest = 0.0
        for block in _iter_branch_blocks(k1, branch, params):
            if not len(block):
                continue
            squared = block.A ** 2
            total += float(np.sum(squared))
            largest = max(largest, float(np.max(squared)))
            min_denominator = min(min_denominator, float(np.min(np.abs(block.denominator))))
            for winding in np.unique(block.winding):
                key = (branch.value, int(winding))
                by_winding[key] = by_winding.get(key, 0.0) + float(np.sum(squared[block.winding == winding]))
        sums.append(total)
        max_terms.append(largest)

    grand_total = float(sum(sums))
    result = BoundScanResult(
        N=N,
        k1=k1,
        sums=(sums[0], sums[1], sums[2]),
        total=grand_total,
        normalized=grand_total / (N ** 2 * math.log(N)),
        min_abs_denominator=min_denominator,
        max_terms=(max_terms[0], max_terms[1], max_terms[2]),
        by_winding=by_winding,
    )
    logger.debug(f"scan_bound N={N} k1={k1}: total={grand_total:.6g} normalized={result.normalized:.6g}")
    return result


def scan_bound_many(N: int, k1_values: Iterable[int], params: Optional[LatticeParams] = None,
                    threads: int = 1) -> List[BoundScanResult]:
    """Independent scans over k1, returned in input order"""
    k1_values = list(k1_values)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda k1: scan_bound(N, k1, params), k1_values))


@dataclass(frozen=True)
class RandomField:
    """b_k = sqrt(φ_k) η_k with i.i.d. zero-mean, unit-variance η_k"""
    phi: np.ndarray
    eta_dist: EtaDistribution = "complex-gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.phi.ndim != 1 or not np.all(np.isfinite(self.phi)) or np.any(self.phi < 0):
            raise ConfigurationError("φ must be a finite, non-negative vector over k = 1..N-1")

    @property
    def N(self) -> int:
        return self.phi.shape[0] + 1

    @classmethod
    def constant(cls, N: int, value: float = 1.0, **kwargs) -> "RandomField":
        return cls(phi=np.full(N - 1, float(value)), **kwargs)

    @classmethod
    def inverse_frequency(cls, params: LatticeParams, **kwargs) -> "RandomField":
        """φ_k = 1/ω_k, the equipartition spectrum"""
        return cls(phi=1.0 / dispersion(wavenumbers(params.N), params), **kwargs)

    def draw(self, n_samples: int, rng: np.random.Generator) -> np.ndarray:
        """Samples of b, shape (n_samples, N-1)"""
        shape = (n_samples, self.N - 1)
        if self.eta_dist == "complex-gaussian":
            parts = rng.standard_normal(shape + (2,))
            eta = (parts[..., 0] + 1j * parts[..., 1]) / math.sqrt(2.0)
        else:
            eta = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, shape))
        return np.sqrt(self.phi) * eta


def _padded_phi(field: RandomField) -> np.ndarray:
    return np.concatenate([[0.0], field.phi])


def wick_M(k1: int, field: RandomField, params: LatticeParams) -> float:
    """M = Σ_{B1} |A1|^2 φ2 φ3 φ4, the contracted second moment as usually written"""
    if params.N > WICK_MAX_N:
        raise ConfigurationError(f"wick_M is limited to N <= {WICK_MAX_N}")
    terms = branch_terms(params.N, k1, Branch.B1, params)
    phi = _padded_phi(field)
    return float(np.sum(terms.A ** 2 * phi[terms.k2] * phi[terms.k3] * phi[terms.k4]))


def wick_second_moment(k1: int, field: RandomField, params: LatticeParams) -> float:
    """
    Exact E|Σ_{B1} A1 b2 b3 b4|^2, keeping every pairing.

    Ordered triples are grouped into multisets, which are orthogonal under any
    rotation-invariant η. For complex Gaussian η this is exactly 3! * wick_M.
    """
    if params.N > WICK_MAX_N:
        raise ConfigurationError(f"wick_second_moment is limited to N <= {WICK_MAX_N}")
    N = params.N
    terms = branch_terms(N, k1, Branch.B1, params)
    if not len(terms):
        return 0.0
    triples = np.sort(np.stack([terms.k2, terms.k3, terms.k4], axis=1), axis=1)
    codes = (triples[:, 0] * N + triples[:, 1]) * N + triples[:, 2]
    _, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
    coefficient = np.bincount(inverse.ravel(), weights=terms.A)
    s = triples[first]
    phi = _padded_phi(field)
    phi_product = phi[s[:, 0]] * phi[s[:, 1]] * phi[s[:, 2]]

    if field.eta_dist == "complex-gaussian":
        # E|η|^{2n} = n!
        all_equal = (s[:, 0] == s[:, 1]) & (s[:, 1] == s[:, 2])
        one_pair = ~all_equal & ((s[:, 0] == s[:, 1]) | (s[:, 1] == s[:, 2]))
        moment = np.where(all_equal, 6.0, np.where(one_pair, 2.0, 1.0))
    else:
        moment = np.ones_like(phi_product)
    return float(np.sum(coefficient ** 2 * phi_product * moment))


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float


def sample_cubic_sums(k1: int, field: RandomField, n_samples: int, params: LatticeParams) -> np.ndarray:
    """
    Realizations of Σ_{B1} A1 b2 b3 b4.

    Samples are drawn in fixed-size blocks whose generators are seeded from
    (field.seed, block index), so results do not depend on how work is split.
    """
    if params.N > MONTE_CARLO_MAX_N:
        raise ConfigurationError(f"Monte-Carlo sums are limited to N <= {MONTE_CARLO_MAX_N}")
    terms = branch_terms(params.N, k1, Branch.B1, params)
    sums = np.empty(n_samples, dtype=np.complex128)
    for block, start in enumerate(range(0, n_samples, MONTE_CARLO_BLOCK)):
        size = min(MONTE_CARLO_BLOCK, n_samples - start)
        rng = np.random.default_rng(np.random.SeedSequence([field.seed, block]))
        b = np.zeros((size, params.N), dtype=np.complex128)
        b[:, 1:] = field.draw(size, rng)
        sums[start:start + size] = (b[:, terms.k2] * b[:, terms.k3] * b[:, terms.k4]) @ terms.A
    return sums


def monte_carlo_M(k1: int, field: RandomField, n_samples: int, params: LatticeParams) -> MonteCarloEstimate:
    if n_samples < 100:
        raise ConfigurationError(f"monte_carlo_M needs at least 100 samples, got {n_samples}")
    squared = np.abs(sample_cubic_sums(k1, field, n_samples, params)) ** 2
    mean = float(np.mean(squared))
    stderr = float(np.std(squared, ddof=1) / math.sqrt(n_samples))
    logger.debug(f"monte_carlo_M k1={k1} N={params.N}: {mean:.6g} ± {stderr:.3g}")
    return MonteCarloEstimate(mean, stderr)


def tail_fraction(sums: np.ndarray, second_moment: float, A: float = 3.0) -> float:
    """Fraction of realizations with |Σ| >= A sqrt(second_moment)"""
    if second_moment <= 0:
        return 0.0
    return float(np.mean(np.abs(sums) >= A * math.sqrt(second_moment)))


@dataclass(frozen=True)
class _BranchTensor:
    target: np.ndarray
    k2: np.ndarray
    k3: np.ndarray
    k4: np.ndarray
    A: np.ndarray


@lru_cache(maxsize=8)
def _transform_tensors(N: int, kappa: float, m: float) -> Dict[Branch, _BranchTensor]:
    params = LatticeParams(N=N, kappa=kappa, m=m)
    tensors = {}
    for branch in Branch:
        per_k1 = [branch_terms(N, int(k1), branch, params) for k1 in wavenumbers(N)]
        tensors[branch] = _BranchTensor(
            target=np.concatenate([np.full(len(t), t.k1, dtype=np.int32) for t in per_k1]),
            k2=np.concatenate([t.k2 for t in per_k1]).astype(np.int32),
            k3=np.concatenate([t.k3 for t in per_k1]).astype(np.int32),
            k4=np.concatenate([t.k4 for t in per_k1]).astype(np.int32),
            A=np.concatenate([t.A for t in per_k1]),
        )
    return tensors


def _scatter_sum(target: np.ndarray, values: np.ndarray, N: int) -> np.ndarray:
    return (np.bincount(target, weights=values.real, minlength=N)
            + 1j * np.bincount(target, weights=values.imag, minlength=N))


def normal_form_correction(b: SpectralField, params: LatticeParams) -> np.ndarray:
    """The bracket of the transformation, i.e. (a - b) / (β/3), indexed by k = 1..N-1"""
    N = params.N
    if N > TRANSFORM_MAX_N:
        raise ConfigurationError(f"apply_transform is a reference kernel limited to N <= {TRANSFORM_MAX_N}")
    if b.N != N:
        raise ConfigurationError(f"Field has N={b.N}, params have N={N}")
    tensors = _transform_tensors(N, params.kappa, params.m)
    full = b.padded()
    conj = np.conj(full)

    t1 = tensors[Branch.B1]
    t2 = tensors[Branch.B2]
    t3 = tensors[Branch.B3]
    correction = _scatter_sum(t1.target, t1.A * full[t1.k2] * full[t1.k3] * full[t1.k4], N)
    correction += 3.0 * _scatter_sum(t2.target, t2.A * full[t2.k2] * conj[t2.k3] * conj[t2.k4], N)
    correction += _scatter_sum(t3.target, t3.A * conj[t3.k2] * conj[t3.k3] * conj[t3.k4], N)
    return correction[1:]


def apply_transform(b: SpectralField, params: LatticeParams) -> SpectralField:
    """a = b + (β/3)[Σ A1 bbb + 3 Σ A2 b b* b* + Σ A3 b* b* b*]"""
    if params.beta == 0:
        return SpectralField(a=b.a.copy(), t=b.t)
    return SpectralField(a=b.a + (params.beta / 3.0) * normal_form_correction(b, params), t=b.t)


def deviation(a: SpectralField, b: SpectralField, floor: float = 1e-8) -> Tuple[float, float]:
    """Relative ℓ2 distance ‖a-b‖/‖b‖ and the largest per-mode ratio |a_k-b_k|/|b_k|"""
    difference = np.abs(a.a - b.a)
    relative = float(np.linalg.norm(difference) / np.linalg.norm(b.a))
    populated = np.abs(b.a) > floor
    worst = float(np.max(difference[populated] / np.abs(b.a[populated]))) if np.any(populated) else 0.0
    return relative, worst


def validity_ratio(k1: int, field: RandomField, params: LatticeParams) -> float:
    """Typical size of the B1 correction at k1 relative to the typical |b_k1|"""
    typical_b = math.sqrt(field.phi[k1 - 1])
    if typical_b == 0:
        return math.inf
    return params.beta / 3.0 * math.sqrt(wick_second_moment(k1, field, params)) / typical_b
