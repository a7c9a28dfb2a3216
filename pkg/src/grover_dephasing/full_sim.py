"""Exact N x N density-matrix simulation of noisy Grover search.

Serves as the brute-force reference for the reduced dynamics.  Element
indices in the public API are 1-based (target = 1); arrays are 0-based.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .reduced_dynamics import BasisKind, NoiseKind, ProblemSpec
from .trace import EvolutionTrace

MAX_N_ENV = "GROVER_DEPHASING_MAX_N"
DEFAULT_MAX_N = 512


class ResourceLimitError(RuntimeError):
    """Requested simulation exceeds the configured size cap."""


def max_n() -> int:
    return int(os.environ.get(MAX_N_ENV, DEFAULT_MAX_N))


@dataclass(frozen=True)
class NoiseConfig:
    kind: NoiseKind
    noisy_set: frozenset[int]
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        object.__setattr__(self, "noisy_set", frozenset(int(i) for i in self.noisy_set))
        _check_rate(self.rate)

    @classmethod
    def from_spec(cls, spec: ProblemSpec, rate: float) -> "NoiseConfig":
        noisy = set(range(2, spec.noisy_count + 2))
        if spec.target_noisy:
            noisy.add(1)
        return cls(spec.noise_kind, frozenset(noisy), rate)


def _check_rate(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"dephasing rate {p} outside [0, 1]")


def _mask(n: int, noisy_set) -> np.ndarray:
    idx = np.zeros(n, dtype=bool)
    for j in noisy_set:
        if not 1 <= j <= n:
            raise ValueError(f"element index {j} outside 1..{n}")
        idx[j - 1] = True
    return idx


def grover_unitary(n: int) -> np.ndarray:
    """Dense ``G @ R_f`` with the target at index 1."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    g = np.full((n, n), 2.0 / n) - np.eye(n)
    g[:, 0] *= -1.0
    return g


def apply_coupled_dephasing(rho: np.ndarray, noisy_set, p: float) -> np.ndarray:
    """Damp coherences between the noisy set and its complement by ``1 - p``."""
    _check_rate(p)
    inside = _mask(rho.shape[0], noisy_set)
    cross = inside[:, None] != inside[None, :]
    return np.where(cross, (1 - p) * rho, rho)


def apply_decoupled_dephasing(rho: np.ndarray, noisy_set, p: float) -> np.ndarray:
    """Independent canonical dephasing on every element of ``noisy_set``."""
    _check_rate(p)
    inside = _mask(rho.shape[0], noisy_set)
    hits = inside[:, None].astype(int) + inside[None, :].astype(int)
    np.fill_diagonal(hits, 0)
    return rho * (1 - p) ** hits


def dephase(rho: np.ndarray, config: NoiseConfig) -> np.ndarray:
    if config.kind is NoiseKind.COUPLED:
        return apply_coupled_dephasing(rho, config.noisy_set, config.rate)
    return apply_decoupled_dephasing(rho, config.noisy_set, config.rate)


def _grover_conjugate(rho: np.ndarray) -> np.ndarray:
    # U rho U^T in O(N^2): U = G R_f with G = 2|s><s| - I.
    x = rho.copy()
    x[0, :] *= -1.0
    x[:, 0] *= -1.0
    row_mean = x.mean(axis=1)
    col_mean = x.mean(axis=0)
    # G X G = 4 s s^T X s s^T - 2 s s^T X - 2 X s s^T + X
    return 4.0 * row_mean.mean() - 2.0 * col_mean[None, :] - 2.0 * row_mean[:, None] + x


def evolve_full(n: int, noise_config: NoiseConfig, steps: int) -> EvolutionTrace:
    """Track ``<1|rho(m)|1>`` for ``m = 0..steps`` from the uniform state."""
    cap = max_n()
    if n > cap:
        raise ResourceLimitError(
            f"n={n} exceeds the full-simulation cap {cap} (set {MAX_N_ENV} to raise it)"
        )
    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps}")
    mask = _damping_mask(n, noise_config)
    rho = np.full((n, n), 1.0 / n)
    out = np.empty(steps + 1)
    out[0] = rho[0, 0]
    for m in range(1, steps + 1):
        rho = _grover_conjugate(rho * mask)
        out[m] = rho[0, 0]
    return EvolutionTrace(
        steps=np.arange(steps + 1),
        columns={"p_full": out},
        meta={
            "n_elements": n,
            "noise_kind": noise_config.kind.value,
            "noisy_set": sorted(noise_config.noisy_set),
            "rate": noise_config.rate,
        },
    )


def _damping_mask(n: int, config: NoiseConfig) -> np.ndarray:
    return dephase(np.ones((n, n)), config)


def evolve_density(n: int, noise_config: NoiseConfig, steps: int):
    """Yield ``rho(m)`` for ``m = 0..steps`` (used for subspace checks)."""
    mask = _damping_mask(n, noise_config)
    rho = np.full((n, n), 1.0 / n)
    yield rho
    for _ in range(steps):
        rho = _grover_conjugate(rho * mask)
        yield rho


def sigma_basis(spec: ProblemSpec) -> list[np.ndarray]:
    """The active basis operators as dense N x N matrices."""
    n, k = spec.n_elements, spec.noisy_count
    if spec.basis_kind is BasisKind.EQUAL4:
        k = n - 1
    m = n - k - 1
    tgt = np.zeros(n, dtype=bool)
    tgt[0] = True
    noisy = np.zeros(n, dtype=bool)
    noisy[1 : k + 1] = True
    clean = np.zeros(n, dtype=bool)
    clean[k + 1 :] = True

    def block(a, b):
        return np.outer(a, b).astype(float)

    def sym(a, b):
        x = block(a, b)
        return x + x.T

    eye = np.eye(n)
    s1 = block(tgt, tgt)
    off_noisy = block(noisy, noisy) * (1 - eye)
    s2 = off_noisy / math.sqrt(k * (k - 1)) if k >= 2 else off_noisy
    s3 = block(clean, clean) / m if m else block(clean, clean)
    s4 = sym(tgt, noisy) / math.sqrt(2 * k) if k else sym(tgt, noisy)
    s5 = sym(noisy, clean) / math.sqrt(2 * k * m) if k * m else sym(noisy, clean)
    s6 = sym(tgt, clean) / math.sqrt(2 * m) if m else sym(tgt, clean)
    s7 = np.diag(noisy.astype(float)) / math.sqrt(k) if k else np.diag(noisy.astype(float))

    if spec.basis_kind is BasisKind.GENERAL7:
        return [s1, s2, s3, s4, s5, s6, s7]
    if spec.basis_kind is BasisKind.COUPLED6:
        return [s1, block(noisy, noisy) / k, s3, s4, s5, s6]
    return [s1, s2, s4, s7]


def project_to_sigma(rho: np.ndarray, spec: ProblemSpec):
    """Coefficients ``a_j = Tr[sigma_j^T rho]`` and the Frobenius residual."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (spec.n_elements, spec.n_elements):
        raise ValueError(
            f"rho has shape {rho.shape}, spec needs N={spec.n_elements}"
        )
    basis = sigma_basis(spec)
    a = np.array([np.sum(s * rho) for s in basis])
    recon = sum(c * s for c, s in zip(a, basis))
    return a, float(np.linalg.norm(rho - recon))
