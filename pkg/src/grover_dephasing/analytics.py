"""Closed-form success probabilities and limiting states.

The first-order formulas are only trustworthy inside a region where the
neglected terms stay small.  The region is asymptotic ("much less than"),
so each result carries a flag computed against ``VALIDITY_C``:
``k p < c sqrt(N)`` for damping on normal elements and ``q < c / sqrt(N)``
for damping that touches the target.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .reduced_dynamics import (
    BasisKind,
    NoiseKind,
    NoiseParams,
    ProblemSpec,
    build_step,
    initial_state,
    trace_weights,
)

VALIDITY_C = 0.1


class Validity(str, enum.Enum):
    IN_REGION = "in_region"
    OUT_OF_REGION = "out_of_region"


class NoLimitError(ValueError):
    """The noisy map has no unique attracting state (e.g. zero noise)."""


@dataclass(frozen=True)
class ApproxResult:
    value: float
    validity: Validity
    constraint_note: str

    @property
    def in_region(self) -> bool:
        return self.validity is Validity.IN_REGION

    def __float__(self) -> float:
        return self.value


def _theta(n: int) -> float:
    return math.acos(1.0 - 2.0 / n)


def grover_success(n: int, m) -> float:
    """Noiseless success probability ``sin^2((2m+1) theta / 2)``, cos theta = 1 - 2/N."""
    return np.sin((2 * np.asarray(m) + 1) * _theta(n) / 2) ** 2


def optimal_steps(n: int) -> tuple[float, int]:
    """``(pi/4) sqrt(N)`` and its nearest integer."""
    m0 = math.pi / 4 * math.sqrt(n)
    return m0, int(math.floor(m0 + 0.5))


def _flag(ok: bool, note: str) -> tuple[Validity, str]:
    return (Validity.IN_REGION if ok else Validity.OUT_OF_REGION), note


def _periodic(n, m, damping):
    return 0.5 * np.cos((2 * np.asarray(m) + 1) * _theta(n)) * damping ** np.asarray(m)


def _finish(value, validity, note):
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        value = float(value)
    return ApproxResult(value, validity, note)


def approx_equal_treatment(n: int, p: float, q: float, m) -> ApproxResult:
    """All normal elements alike: rate ``p`` on normals, ``q`` on the target."""
    m = np.asarray(m)
    static = 1.0 / n + (n - 2) / (2.0 * n) * (1 - n * p / (n - 1)) ** m
    damp = 1 - (2 * n - 3) * p / (2.0 * (n - 1)) - q / 2
    bound = VALIDITY_C / math.sqrt(n)
    validity, note = _flag(
        p < bound and q < bound, f"p, q < {VALIDITY_C}/sqrt(N) = {bound:.4g}"
    )
    return _finish(static - _periodic(n, m, damp), validity, note)


def approx_coupled(n: int, k: int, p: float, m) -> ApproxResult:
    """Coupled noise on ``k`` normals, target in the larger (clean) block."""
    m = np.asarray(m)
    big_m = n - k - 1
    static = 1 / 3 + (1 / 6) * (1 - 3 * k * big_m * p / (n - 1) ** 2) ** m
    damp = 1 - k * (2 * n - k - 2) * p / (2.0 * (n - 1) ** 2)
    bound = VALIDITY_C * math.sqrt(n)
    validity, note = _flag(k * p < bound, f"k p < {VALIDITY_C} sqrt(N) = {bound:.4g}")
    return _finish(static - _periodic(n, m, damp), validity, note)


def approx_decoupled_special(n: int, p: float, m) -> ApproxResult:
    """Decoupled noise on the target and a single normal element, same rate."""
    m = np.asarray(m)
    static = 1 / 3 + (1 / 6) * (1 - 3 * (n - 2) * p / (n - 1) ** 2) ** m
    damp = 1 - (n * n - 2) * p / (2.0 * (n - 1) ** 2)
    bound = VALIDITY_C / math.sqrt(n)
    validity, note = _flag(p < bound, f"p < {VALIDITY_C}/sqrt(N) = {bound:.4g}")
    return _finish(static - _periodic(n, m, damp), validity, note)


def approx_decoupled_general(n: int, k: int, p: float, q: float, m) -> ApproxResult:
    """Decoupled noise of rate ``p`` on ``k`` normals, rate ``q`` on the target."""
    m = np.asarray(m)
    static = 1.0 / (k + 2) + k / (2.0 * (k + 2)) * (
        1 - (n - 2) * (k + 2) * p / (n - 1) ** 2
    ) ** m
    damp = 1 - k * (2 * n - 3) * p / (2.0 * (n - 1) ** 2) - q / 2
    lo, hi = VALIDITY_C / math.sqrt(n), VALIDITY_C * math.sqrt(n)
    validity, note = _flag(
        k * p < hi and q < lo,
        f"k p < {VALIDITY_C} sqrt(N) = {hi:.4g} and q < {VALIDITY_C}/sqrt(N) = {lo:.4g}",
    )
    return _finish(static - _periodic(n, m, damp), validity, note)


def approx_for(spec: ProblemSpec, rate: float, m) -> ApproxResult:
    """Closed-form curve matching the scenario described by ``spec``."""
    n, k = spec.n_elements, spec.noisy_count
    tgt = spec.target_noisy
    if k == 0:
        return approx_equal_treatment(n, 0.0, rate if tgt else 0.0, m)
    if spec.noise_kind is NoiseKind.COUPLED:
        if k == n - 1:
            return approx_equal_treatment(n, 0.0, 0.0 if tgt else rate, m)
        # Target in the smaller block is the mirror case k -> N - k - 1.
        return approx_coupled(n, n - k - 1 if tgt else k, rate, m)
    if k == n - 1:
        return approx_equal_treatment(n, rate, rate if tgt else 0.0, m)
    if k == 1 and tgt:
        return approx_decoupled_special(n, rate, m)
    return approx_decoupled_general(n, k, rate, rate if tgt else 0.0, m)


def _null_space(a: np.ndarray, tol: float) -> np.ndarray:
    _, sv, vh = np.linalg.svd(a)
    return vh[sv <= tol].T


def limiting_state(spec: ProblemSpec, noise: NoiseParams, tol: float = 1e-9) -> np.ndarray:
    """Long-time state reached from ``|s><s|`` under the noisy map.

    Computed as the spectral projection of the initial state onto the
    eigenvalue-1 subspace; this requires every other eigenvalue to lie
    strictly inside the unit circle.
    """
    if noise.is_zero:
        raise NoLimitError("zero noise: the evolution oscillates forever")
    mat = build_step(spec, noise).matrix
    ev = np.linalg.eigvals(mat)
    away = np.abs(ev - 1) > 1e-7
    if np.any(np.abs(ev[away]) > 1 - tol):
        raise NoLimitError(
            "undamped eigenvalues on the unit circle: "
            f"{np.round(ev[away & (np.abs(ev) > 1 - tol)], 12).tolist()}"
        )
    eye = np.eye(spec.dim)
    right = _null_space(mat - eye, 1e-8)
    left = _null_space(mat.T - eye, 1e-8)
    proj = right @ np.linalg.solve(left.T @ right, left.T)
    mu = proj @ initial_state(spec)
    return mu / (trace_weights(spec) @ mu)


def known_limit(spec: ProblemSpec, noise: NoiseParams) -> np.ndarray | None:
    """Closed-form limit where one is known, else ``None``.

    Covers the broken-target case of the equal-treatment basis and coupled
    noise in the 6-dim basis.
    """
    if spec.basis_kind is BasisKind.EQUAL4 and noise.p == 0 and noise.q > 0:
        r, t = spec.r, spec.t
        return np.array(
            [math.sqrt(1 + r), math.sqrt(2 * r), 0.0, math.sqrt(t)]
        ) / (2 * math.sqrt(1 + r))
    if (
        spec.basis_kind is BasisKind.COUPLED6
        and spec.noise_kind is NoiseKind.COUPLED
        and noise.p > 0
    ):
        return np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]) / 3
    return None
