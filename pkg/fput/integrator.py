"""
Sixth-order symplectic integration of the physical equations of motion.

The scheme is the 7-stage symmetric composition of drift-kick-drift leapfrog
steps (Yoshida's solution A). Stepping runs inside a numba kernel that releases
the GIL, so independent trajectories can share a thread pool.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
from numba import njit

from fput.config import IntegratorConfig
from fput.errors import BlowUpError, ConfigurationError, ObserverError
from fput.lattice import ChainState, LatticeParams, force_kernel

logger = logging.getLogger(__name__)

YOSHIDA6_W1 = -1.17767998417887
YOSHIDA6_W2 = 0.235573213359357
YOSHIDA6_W3 = 0.784513610477560
YOSHIDA6_W0 = 1.0 - 2.0 * (YOSHIDA6_W1 + YOSHIDA6_W2 + YOSHIDA6_W3)
YOSHIDA6_WEIGHTS = np.array(
    [YOSHIDA6_W3, YOSHIDA6_W2, YOSHIDA6_W1, YOSHIDA6_W0, YOSHIDA6_W1, YOSHIDA6_W2, YOSHIDA6_W3]
)

Observer = Callable[[ChainState], Any]


@njit(cache=True, nogil=True)
def _advance(q, p, n_steps, h, m, kappa, beta, weights):
    force = np.empty_like(q)
    for _ in range(n_steps):
        for w in weights:
            half_drift = 0.5 * w * h / m
            q += half_drift * p
            force_kernel(q, force, kappa, beta)
            p += (w * h) * force
            q += half_drift * p


@dataclass
class ObservationLog:
    """Observer outputs in sampling order"""
    records: List[Tuple[float, Dict[str, Any]]] = field(default_factory=list)

    def append(self, t: float, values: Dict[str, Any]):
        self.records.append((t, values))

    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.records])

    def series(self, name: str) -> List[Any]:
        return [values[name] for _, values in self.records]

    def __len__(self) -> int:
        return len(self.records)


def n_steps_for(t_span: float, h: float) -> int:
    return int(round(t_span / h))


def _observer_name(observer: Observer) -> str:
    return getattr(observer, "__name__", type(observer).__name__)


def _check_finite(q: np.ndarray, p: np.ndarray, t: float):
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        max_abs_q = float(np.max(np.abs(q), initial=0.0, where=np.isfinite(q)))
        logger.error(f"Integration blew up at t={t:.6g}")
        raise BlowUpError(t, max_abs_q)


def step(state: ChainState, params: LatticeParams, config: IntegratorConfig,
         backward: bool = False) -> ChainState:
    """Advance by one time step h (or apply the exact inverse map with backward=True)"""
    state.validate(params)
    h = -config.h if backward else config.h
    q = np.array(state.q, dtype=np.float64)
    p = np.array(state.p, dtype=np.float64)
    _advance(q, p, 1, h, params.m, params.kappa, params.beta, YOSHIDA6_WEIGHTS)
    _check_finite(q, p, state.t + h)
    return ChainState(q=q, p=p, t=state.t + h)


def evolve(state: ChainState, params: LatticeParams, config: IntegratorConfig, t_max: float,
           observers: Sequence[Observer] = ()) -> Tuple[ChainState, ObservationLog]:
    """
    Integrate up to t_max, calling every observer each n_substeps_per_sample steps

    Args:
        state: initial state
        params: chain parameters
        config: time step and sampling cadence
        t_max: final time; the last step lands on state.t + round((t_max - t)/h) * h
        observers: callbacks receiving a ChainState snapshot; their return
            values are stored in the log under the callback's name

    Returns:
        The final state and the observation log

    Raises:
        BlowUpError: If the state stops being finite
        ObserverError: If an observer raises
    """
    state.validate(params)
    if t_max < state.t:
        raise ConfigurationError(f"t_max={t_max} lies before the initial time {state.t}")

    n_total = n_steps_for(t_max - state.t, config.h)
    cadence = config.n_substeps_per_sample
    log = ObservationLog()
    q = np.array(state.q, dtype=np.float64)
    p = np.array(state.p, dtype=np.float64)
    t = state.t
    done = 0
    logger.debug(f"Evolving N={params.N} for {n_total} steps of h={config.h}")

    while done < n_total:
        chunk = min(cadence, n_total - done)
        _advance(q, p, chunk, config.h, params.m, params.kappa, params.beta, YOSHIDA6_WEIGHTS)
        done += chunk
        t = state.t + done * config.h
        _check_finite(q, p, t)
        if chunk < cadence:
            continue

        snapshot = ChainState(q=q.copy(), p=p.copy(), t=t)
        values = {}
        for observer in observers:
            name = _observer_name(observer)
            try:
                values[name] = observer(snapshot)
            except Exception as e:
                logger.error(f"Observer '{name}' failed at t={t:.6g}: {e}", exc_info=True)
                raise ObserverError(name, t, e) from e
        log.append(t, values)

    return ChainState(q=q, p=p, t=t), log
