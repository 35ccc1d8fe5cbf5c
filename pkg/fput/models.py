from pydantic import BaseModel

from fput.config import InitKind


class RunRecord(BaseModel):
    """One averaged cell of the ratio sweep"""
    N: int
    beta: float
    betaN: float
    init: InitKind
    r: float
    spread: float
    S1_mean: float
    S2_mean: float
    S3_mean: float
    energy_drift: float
    wall_time: float = 0.0
    seed: int
    valid: bool = True
    note: str = ""


class ScanRow(BaseModel):
    N: int
    k1: int
    sumB1: float
    sumB2: float
    sumB3: float
    total: float
    normalized: float


class WickRow(BaseModel):
    N: int
    k1: int
    phi: str
    eta_dist: str
    n_samples: int
    wick_M: float
    second_moment: float
    mc_mean: float
    mc_stderr: float
    z_score: float
    tail_fraction: float


class DeviationRow(BaseModel):
    N: int
    betaN: float
    seed: int
    deviation: float
    max_mode_ratio: float


class TraceRow(BaseModel):
    t: float
    S1: float
    S2: float
    S3: float
    H: float
