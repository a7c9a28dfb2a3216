"""Expected oracle cost under repeat-until-success and its scaling with N."""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .analytics import optimal_steps
from .reduced_dynamics import NoiseKind, NoiseParams, build_step, initial_state, select_basis

log = logging.getLogger(__name__)

P_FLOOR = 1e-12


class UnusableError(ValueError):
    """Success probability too small for a finite expected cost."""


class StopMode(str, enum.Enum):
    FIXED_M0 = "fixed_m0"
    MINIMIZED = "minimized"


def expected_steps(p_suc: float, m: int) -> float:
    """Average oracle calls ``(m + 1) / p`` when every attempt runs ``m`` steps."""
    if not p_suc > P_FLOOR:
        raise UnusableError(f"p_suc={p_suc} at m={m} is below the floor {P_FLOOR}")
    return (m + 1) / p_suc


def cost_curve(p_suc: Sequence[float], steps: Sequence[int] | None = None):
    """``[(m, mbar or None), ...]``; ``None`` marks unusable points."""
    p_suc = np.asarray(p_suc, dtype=float)
    steps = np.arange(len(p_suc)) if steps is None else np.asarray(steps)
    return [
        (int(m), (m + 1) / p if p > P_FLOOR else None) for m, p in zip(steps, p_suc)
    ]


def optimal_expected_steps(p_suc: Sequence[float], steps: Sequence[int] | None = None):
    """Minimize ``(m + 1) / p(m)`` over ``m >= 1``; smallest ``m`` wins ties."""
    best = None
    for m, mbar in cost_curve(p_suc, steps):
        if m < 1 or mbar is None:
            continue
        if best is None or mbar < best[1]:
            best = (m, mbar)
    if best is None:
        raise UnusableError("no usable point with m >= 1")
    return best


@dataclass(frozen=True)
class ScalingRecord:
    n_elements: int
    noisy_count: int
    p: float
    q: float
    kind: str
    mode: StopMode
    m_used: int
    mbar: float
    error: str | None = None


@dataclass
class GridConfig:
    """Scaling scan over ``N``; ``noisy_count`` may be a callable ``k(N)``."""

    n_values: Sequence[int] = field(default_factory=lambda: [2**i for i in range(6, 17)])
    noisy_count: int | Callable[[int], int] = 0
    p: float = 0.0
    q: float = 0.0
    kind: NoiseKind = NoiseKind.COUPLED
    mode: StopMode = StopMode.FIXED_M0
    scan_factor: float = 4.0
    workers: int = 1

    def k_of(self, n: int) -> int:
        k = self.noisy_count(n) if callable(self.noisy_count) else self.noisy_count
        return int(k)


def k_power(mu: float) -> Callable[[int], int]:
    """``k(N) = ceil(N**mu)``."""

    def k_of(n: int) -> int:
        return int(math.ceil(n**mu - 1e-9))

    k_of.__name__ = f"k_power_{mu}"
    return k_of


def scenario_noise(n: int, k: int, p: float, q: float, kind: NoiseKind):
    """Spec and block rates with rate ``p`` on ``k`` normals and ``q`` on the target.

    ``p`` and ``q`` are independent here, unlike the single-rate scenarios
    handled by :func:`noise_params`.
    """
    kind = NoiseKind(kind)
    spec = select_basis(n, k, kind, q > 0)
    if k == 0:
        return spec, NoiseParams.equal_treatment(0.0, q)
    if k == n - 1:
        if kind is NoiseKind.COUPLED:
            raise ValueError("coupled noise on every normal element is target-only noise")
        return spec, NoiseParams.equal_treatment(p, q)
    if kind is NoiseKind.COUPLED:
        if q > 0 and q != p:
            raise ValueError("coupled noise with the target in the noisy block needs q == p")
        return spec, NoiseParams(p=p, q=q, s=0.0 if q > 0 else p, w=0.0)
    w = 2 * p - p * p
    s = 1 - (1 - p) * (1 - q)
    return spec, NoiseParams(p=p, q=q, s=s, w=w if k >= 2 else 0.0)


def _success_curve(spec, noise, steps: int) -> np.ndarray:
    mat = build_step(spec, noise).matrix
    a = initial_state(spec)
    out = np.empty(steps + 1)
    out[0] = a[0]
    for m in range(1, steps + 1):
        a = mat @ a
        out[m] = a[0]
    return out


def _scan_point(cfg: GridConfig, n: int) -> ScalingRecord:
    k = cfg.k_of(n)
    m0_real, m0 = optimal_steps(n)
    try:
        spec, noise = scenario_noise(n, k, cfg.p, cfg.q, cfg.kind)
        if cfg.mode is StopMode.FIXED_M0:
            curve = _success_curve(spec, noise, m0)
            m_used, mbar = m0, expected_steps(curve[m0], m0)
        else:
            cap = max(1, int(math.ceil(cfg.scan_factor * m0_real)))
            m_used, mbar = optimal_expected_steps(_success_curve(spec, noise, cap))
    except ValueError as exc:
        log.warning("scaling point N=%d k=%d failed: %s", n, k, exc)
        return ScalingRecord(n, k, cfg.p, cfg.q, NoiseKind(cfg.kind).value, cfg.mode,
                             0, math.nan, str(exc))
    return ScalingRecord(n, k, cfg.p, cfg.q, NoiseKind(cfg.kind).value, cfg.mode,
                         int(m_used), float(mbar))


def scaling_scan(cfg: GridConfig) -> list[ScalingRecord]:
    """One record per grid point, sorted by ``(N, k, p, q)``."""
    cfg.mode = StopMode(cfg.mode)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(lambda n: _scan_point(cfg, n), cfg.n_values))
    else:
        records = [_scan_point(cfg, n) for n in cfg.n_values]
    return sorted(records, key=lambda r: (r.n_elements, r.noisy_count, r.p, r.q))


@dataclass(frozen=True)
class ExponentFit:
    beta: float
    stderr: float
    n_range: tuple[int, int]
    intercept: float = 0.0


def fit_exponent(records: Sequence[ScalingRecord]) -> ExponentFit:
    """Least-squares slope of ``log mbar`` against ``log N``."""
    good = [r for r in records if r.error is None and np.isfinite(r.mbar)]
    if len(good) < 2:
        raise ValueError(f"need at least two usable records, got {len(good)}")
    n = np.array([r.n_elements for r in good], dtype=float)
    mbar = np.array([r.mbar for r in good])
    if len(good) == 2:
        beta = float(np.diff(np.log(mbar))[0] / np.diff(np.log(n))[0])
        return ExponentFit(beta, 0.0, (int(n.min()), int(n.max())),
                           float(np.log(mbar[0]) - beta * np.log(n[0])))
    res = stats.linregress(np.log(n), np.log(mbar))
    return ExponentFit(float(res.slope), float(res.stderr),
                       (int(n.min()), int(n.max())), float(res.intercept))
