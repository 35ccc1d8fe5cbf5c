"""
Seeded ensemble runs, initial conditions and the βN ratio sweep
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from fput.config import ExperimentConfig, InitKind
from fput.diagnostics import QUARTIC_SCALE, SumSample, quartic_sums_fft, ratio_r
from fput.errors import ConfigurationError, FputError
from fput.integrator import evolve
from fput.lattice import ChainState, LatticeParams, fundamental_period, hamiltonian_physical, total_momentum
from fput.models import DeviationRow, RunRecord, ScanRow, TraceRow, WickRow
from fput.normalform import (
    BoundScanResult, RandomField, apply_transform, deviation, monte_carlo_M, sample_cubic_sums,
    tail_fraction, wick_M, wick_second_moment,
)
from fput.spectral import SpectralField, dispersion, from_normal_modes, to_normal_modes, wavenumbers

logger = logging.getLogger(__name__)

ENERGY_DRIFT_TOL = 1e-6
MOMENTUM_DRIFT_TOL = 1e-10
INIT_CODES: Dict[str, int] = {"thermal": 0, "out-of-equilibrium": 1}


def derive_seed(base_seed: int, N: int, betaN_index: int, init: InitKind, ensemble: int) -> int:
    """Per-trajectory 64-bit seed, independent of the order cells are run in"""
    sequence = np.random.SeedSequence([base_seed, N, betaN_index, INIT_CODES[init], ensemble])
    return int(sequence.generate_state(1, np.uint64)[0])


def _random_phases(N: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, N - 1))


def _check_size(N: int, params: LatticeParams) -> None:
    if N != params.N:
        raise ConfigurationError(f"Initial field for N={N} requested with lattice parameters for N={params.N}")


def _log_quartic_scale() -> None:
    logger.info(f"Quartic Hamiltonian scale resolved to {QUARTIC_SCALE:.6g}: "
                f"H/N = Σω|a|² + {QUARTIC_SCALE:.6g}·β·(S1 + S2 + S3)")


def init_thermal(N: int, params: LatticeParams, seed: int) -> SpectralField:
    """Equipartition of energy: a_k = sqrt(1/ω_k) exp(iφ_k)"""
    _check_size(N, params)
    omega = dispersion(wavenumbers(N), params)
    return SpectralField(a=np.sqrt(1.0 / omega) * _random_phases(N, seed))


def init_out_of_equilibrium(N: int, params: LatticeParams, seed: int) -> SpectralField:
    """a_k = sqrt((1 + ω_k^2)/ω_k) exp(iφ_k)"""
    _check_size(N, params)
    omega = dispersion(wavenumbers(N), params)
    return SpectralField(a=np.sqrt((1.0 + omega ** 2) / omega) * _random_phases(N, seed))


def initial_field(init: InitKind, params: LatticeParams, seed: int) -> SpectralField:
    if init == "thermal":
        return init_thermal(params.N, params, seed)
    return init_out_of_equilibrium(params.N, params, seed)


@dataclass
class EnsembleRun:
    """One trajectory's contribution to a sweep cell"""
    N: int
    betaN: float
    init: InitKind
    ensemble: int
    seed: int
    samples: List[SumSample] = field(default_factory=list)
    energy_drift: float = math.nan
    momentum_drift: float = math.nan
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _trajectory(params: LatticeParams, init: InitKind, seed: int,
                config: ExperimentConfig) -> Tuple[List[SumSample], float, float]:
    state = from_normal_modes(initial_field(init, params, seed), params)
    t_max = config.t_max_in_Tf * fundamental_period(params)
    H0 = hamiltonian_physical(state, params)
    P0 = total_momentum(state)

    def quartic_sample(snapshot: ChainState) -> SumSample:
        sums = quartic_sums_fft(to_normal_modes(snapshot, params), params)
        return SumSample(t=snapshot.t, sums=sums, energy=hamiltonian_physical(snapshot, params))

    final, log = evolve(state, params, config.integrator(), t_max, observers=[quartic_sample])
    samples = log.series("quartic_sample")
    energies = np.array([s.energy for s in samples] or [H0])
    energy_drift = float(np.max(np.abs(energies - H0)) / abs(H0)) if H0 else 0.0
    momentum_drift = abs(total_momentum(final) - P0)
    return samples, energy_drift, momentum_drift


def run_single(config: ExperimentConfig, N: int, betaN_index: int, init: InitKind,
               ensemble: int) -> EnsembleRun:
    """Integrate one seeded trajectory and audit its invariants; failures are recorded, not raised"""
    betaN = config.betaN_values[betaN_index]
    params = config.lattice(N, betaN)
    seed = derive_seed(config.base_seed, N, betaN_index, init, ensemble)
    run = EnsembleRun(N=N, betaN=betaN, init=init, ensemble=ensemble, seed=seed)
    started = time.perf_counter()
    logger.info(f"Run N={N} betaN={betaN} init={init} ensemble={ensemble}")
    try:
        run.samples, run.energy_drift, run.momentum_drift = _trajectory(params, init, seed, config)
    except FputError as e:
        logger.error(f"Run N={N} betaN={betaN} init={init} ensemble={ensemble} failed: {e}", exc_info=True)
        run.error = str(e)
    run.wall_time = time.perf_counter() - started

    if run.ok and run.energy_drift > ENERGY_DRIFT_TOL:
        run.error = f"energy drift {run.energy_drift:.3e} exceeds {ENERGY_DRIFT_TOL:g}"
        logger.warning(f"Run N={N} betaN={betaN} init={init} ensemble={ensemble}: {run.error}")
    elif run.ok and run.momentum_drift > MOMENTUM_DRIFT_TOL * N:
        run.error = f"momentum drift {run.momentum_drift:.3e} exceeds {MOMENTUM_DRIFT_TOL * N:g}"
        logger.warning(f"Run N={N} betaN={betaN} init={init} ensemble={ensemble}: {run.error}")
    return run


def _aggregate(config: ExperimentConfig, runs: Sequence[EnsembleRun]) -> RunRecord:
    first = runs[0]
    T_f = fundamental_period(config.lattice(first.N, first.betaN))
    window = (config.window_in_Tf[0] * T_f, config.window_in_Tf[1] * T_f)
    record = dict(
        N=first.N, beta=first.betaN / first.N, betaN=first.betaN, init=first.init,
        r=math.nan, spread=math.nan, S1_mean=math.nan, S2_mean=math.nan, S3_mean=math.nan,
        energy_drift=max(run.energy_drift for run in runs),
        wall_time=sum(run.wall_time for run in runs),
        seed=config.base_seed,
    )
    failures = [f"ensemble {run.ensemble}: {run.error}" for run in runs if not run.ok]
    if failures:
        logger.warning(f"Cell N={first.N} betaN={first.betaN} init={first.init} flagged invalid")
        return RunRecord(**record, valid=False, note="; ".join(failures))

    try:
        estimate = ratio_r([run.samples for run in runs], window)
    except FputError as e:
        logger.warning(f"Cell N={first.N} betaN={first.betaN} init={first.init}: {e}")
        return RunRecord(**record, valid=False, note=str(e))

    record.update(r=estimate.r, spread=estimate.spread, S1_mean=estimate.S1_mean,
                  S2_mean=estimate.S2_mean, S3_mean=estimate.S3_mean)
    return RunRecord(**record)


def ratio_sweep(config: ExperimentConfig, threads: int = 1) -> List[RunRecord]:
    """
    Non-resonant fraction r for every (N, βN, init) cell

    Trajectories run on a thread pool; results are reduced in
    (cell, ensemble) order, so output does not depend on scheduling.
    """
    _log_quartic_scale()
    cells = [(N, index, init)
             for N in config.N
             for index in range(len(config.betaN_values))
             for init in config.init]
    jobs = [(cell, ensemble) for cell in cells for ensemble in range(config.n_ensembles)]
    logger.info(f"Ratio sweep: {len(cells)} cells, {len(jobs)} trajectories, {threads} worker(s)")

    with ThreadPoolExecutor(max_workers=threads) as pool:
        runs = list(pool.map(lambda job: run_single(config, *job[0], job[1]), jobs))

    records = []
    for i, cell in enumerate(cells):
        cell_runs = runs[i * config.n_ensembles:(i + 1) * config.n_ensembles]
        record = _aggregate(config, cell_runs)
        logger.info(f"Cell N={record.N} betaN={record.betaN} init={record.init}: "
                    f"r={record.r:.4g} ± {record.spread:.2g} (valid={record.valid})")
        records.append(record)
    return records


def simulate(config: ExperimentConfig, N: int, betaN: float, init: InitKind, seed: int) -> List[TraceRow]:
    """Single trajectory with its per-sample trace (t, S1, S2, S3, H)"""
    _log_quartic_scale()
    params = config.lattice(N, betaN)
    samples, energy_drift, _ = _trajectory(params, init, seed, config)
    logger.info(f"Simulated N={N} betaN={betaN} init={init}: {len(samples)} samples, "
                f"max relative energy drift {energy_drift:.3e}")
    rows = []
    for sample in samples:
        S1, S2, S3 = sample.sums.as_real()
        rows.append(TraceRow(t=sample.t, S1=S1, S2=S2, S3=S3, H=sample.energy))
    return rows


def scan_rows(results: Iterable[BoundScanResult]) -> List[ScanRow]:
    return [
        ScanRow(N=r.N, k1=r.k1, sumB1=r.sums[0], sumB2=r.sums[1], sumB3=r.sums[2],
                total=r.total, normalized=r.normalized)
        for r in results
    ]


def wick_check(params: LatticeParams, k1: int, phi_kind: str, eta_dist: str,
               n_samples: int, seed: int) -> WickRow:
    """Monte-Carlo second moment of the B1 cubic sum against its Wick contraction"""
    if phi_kind == "ones":
        field = RandomField.constant(params.N, 1.0, eta_dist=eta_dist, seed=seed)
    else:
        field = RandomField.inverse_frequency(params, eta_dist=eta_dist, seed=seed)
    M = wick_M(k1, field, params)
    exact = wick_second_moment(k1, field, params)
    mean, stderr = monte_carlo_M(k1, field, n_samples, params)
    tail = tail_fraction(sample_cubic_sums(k1, field, n_samples, params), exact)
    z = (mean - exact) / stderr if stderr > 0 else 0.0
    logger.info(f"Wick check N={params.N} k1={k1} phi={phi_kind} eta={eta_dist}: "
                f"M={M:.6g}, E|Σ|²={exact:.6g}, MC={mean:.6g} ± {stderr:.3g}, tail={tail:.4f}")
    return WickRow(N=params.N, k1=k1, phi=phi_kind, eta_dist=eta_dist, n_samples=n_samples,
                   wick_M=M, second_moment=exact, mc_mean=mean, mc_stderr=stderr,
                   z_score=z, tail_fraction=tail)


def transform_check(N: int, betaN_values: Sequence[float], seeds: Iterable[int],
                    kappa: float = 1.0, m: float = 1.0) -> List[DeviationRow]:
    """Deviation ‖a - b‖/‖b‖ of the normal-form map on thermal fields"""
    rows = []
    for seed in seeds:
        base = LatticeParams(N=N, kappa=kappa, m=m)
        b = init_thermal(N, base, seed)
        for betaN in betaN_values:
            a = apply_transform(b, base.with_beta(betaN / N))
            relative, worst = deviation(a, b)
            rows.append(DeviationRow(N=N, betaN=betaN, seed=seed, deviation=relative, max_mode_ratio=worst))
    return rows
