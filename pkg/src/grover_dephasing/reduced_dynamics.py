"""Noisy Grover evolution restricted to an invariant operator subspace.

The density matrix of a single-target Grover search under localized
dephasing never leaves the span of a handful of real matrices (the
"sigma basis").  Writing the state as ``rho = sum_j a_j sigma_j`` turns one
noisy step into a small real linear map ``a -> U @ (D * a)`` where ``U`` is
orthogonal and ``D`` is a diagonal vector of damping factors.

Three bases are supported:

``GENERAL7``
    sigma_1..sigma_7; target / noisy normals / clean normals kept apart and
    the diagonal of the noisy block tracked separately (decoupled noise).
``COUPLED6``
    sigma_2 and sigma_7 merged into one block operator; enough for coupled
    noise and for decoupled noise on a single normal element.
``EQUAL4``
    all normal elements in one group (k = 0 or k = N - 1); slots are
    sigma_1, sigma_2, sigma_4, sigma_7 with k = N - 1.

Element numbering follows the usual convention: target is element 1,
noisy normals are 2..k+1, the remaining ``M = N - k - 1`` are clean.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .trace import EvolutionTrace

__all__ = [
    "BasisKind",
    "NoiseKind",
    "NoiseParams",
    "ProblemSpec",
    "ReducedStep",
    "build_step",
    "evolve",
    "initial_state",
    "noise_params",
    "select_basis",
    "step",
    "success_probability",
    "trace_of",
]


class NoiseKind(str, enum.Enum):
    COUPLED = "coupled"
    DECOUPLED = "decoupled"


class BasisKind(str, enum.Enum):
    GENERAL7 = "general7"
    COUPLED6 = "coupled6"
    EQUAL4 = "equal4"

    @property
    def dim(self) -> int:
        return {"general7": 7, "coupled6": 6, "equal4": 4}[self.value]


@dataclass(frozen=True)
class ProblemSpec:
    """Database layout plus the noise scenario; selects the reduced basis.

    Build it through :func:`select_basis` unless a specific basis is wanted
    (e.g. running coupled noise through the 7-dimensional basis as a
    cross-check).
    """

    n_elements: int
    noisy_count: int
    noise_kind: NoiseKind
    target_noisy: bool
    basis_kind: BasisKind

    def __post_init__(self):
        n, k = self.n_elements, self.noisy_count
        object.__setattr__(self, "noise_kind", NoiseKind(self.noise_kind))
        object.__setattr__(self, "basis_kind", BasisKind(self.basis_kind))
        if n < 4:
            raise ValueError(f"n_elements must be >= 4, got {n}")
        if not 0 <= k <= n - 1:
            raise ValueError(f"noisy_count must lie in [0, {n - 1}], got {k}")
        m = n - k - 1
        if self.basis_kind is BasisKind.GENERAL7 and (k < 2 or m < 1):
            raise ValueError(
                f"general7 basis needs k >= 2 and M >= 1 (k={k}, M={m})"
            )
        if self.basis_kind is BasisKind.COUPLED6 and (k < 1 or m < 1):
            raise ValueError(
                f"coupled6 basis needs k >= 1 and M >= 1 (k={k}, M={m})"
            )

    @property
    def clean_count(self) -> int:
        """Number ``M`` of normal elements untouched by the noise."""
        return self.n_elements - self.noisy_count - 1

    @property
    def t(self) -> float:
        return 2.0 / self.n_elements

    @property
    def r(self) -> float:
        return 1.0 - self.t

    @property
    def dim(self) -> int:
        return self.basis_kind.dim


def select_basis(n_elements, noisy_count, noise_kind, target_noisy) -> ProblemSpec:
    """Pick the smallest basis that is exact for the given scenario."""
    n, k = int(n_elements), int(noisy_count)
    kind = NoiseKind(noise_kind)
    if n < 4:
        raise ValueError(f"n_elements must be >= 4, got {n}")
    if not 0 <= k <= n - 1:
        raise ValueError(f"noisy_count must lie in [0, {n - 1}], got {k}")
    if k == 0 or k == n - 1:
        basis = BasisKind.EQUAL4
    elif kind is NoiseKind.COUPLED or k == 1:
        basis = BasisKind.COUPLED6
    else:
        basis = BasisKind.GENERAL7
    return ProblemSpec(n, k, kind, bool(target_noisy), basis)


@dataclass(frozen=True)
class NoiseParams:
    """Damping rates of the four coherence blocks.

    ``p`` acts on noisy-normal / clean-normal coherences, ``q`` on
    target / clean-normal, ``s`` on target / noisy-normal and ``w`` on
    coherences inside the noisy block.  In the ``EQUAL4`` basis ``p`` and
    ``q`` are the effective rates on the normal group and on the target.
    """

    p: float = 0.0
    q: float = 0.0
    s: float = 0.0
    w: float = 0.0

    def __post_init__(self):
        for name in ("p", "q", "s", "w"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"noise rate {name}={value} outside [0, 1]")
            object.__setattr__(self, name, value)

    @classmethod
    def equal_treatment(cls, p: float, q: float) -> "NoiseParams":
        """Rates for the all-normals-alike case: (1-p)^2 and (1-p)(1-q)."""
        return cls(p=p, q=q, s=p + q - p * q, w=2 * p - p * p)

    @property
    def is_zero(self) -> bool:
        return self.p == self.q == self.s == self.w == 0.0


def noise_params(spec: ProblemSpec, rate: float) -> NoiseParams:
    """Translate a base dephasing rate into the four block rates for ``spec``."""
    rate = float(rate)
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate={rate} outside [0, 1]")
    n, k = spec.n_elements, spec.noisy_count
    coupled = spec.noise_kind is NoiseKind.COUPLED
    tgt = spec.target_noisy

    if spec.basis_kind is BasisKind.EQUAL4:
        # Effective (normals, target) rates for the single-normal-group picture.
        if k == 0:
            # Only the target can be noisy; a singleton set behaves the same
            # for both kinds.
            return NoiseParams.equal_treatment(0.0, rate if tgt else 0.0)
        if coupled:
            # Partition {target} vs all normals, or everything in one block.
            return NoiseParams.equal_treatment(0.0, 0.0 if tgt else rate)
        return NoiseParams.equal_treatment(rate, rate if tgt else 0.0)

    if coupled:
        if tgt:
            return NoiseParams(p=rate, q=rate, s=0.0, w=0.0)
        return NoiseParams(p=rate, q=0.0, s=rate, w=0.0)

    w = 2 * rate - rate * rate
    if tgt:
        return NoiseParams(p=rate, q=rate, s=w, w=w if k >= 2 else 0.0)
    return NoiseParams(p=rate, q=0.0, s=rate, w=w if k >= 2 else 0.0)


@dataclass(frozen=True)
class ReducedStep:
    """One noisy Grover step in the sigma basis: ``a -> U @ (D * a)``."""

    unitary_matrix: np.ndarray
    dephasing_diag: np.ndarray
    basis_kind: BasisKind = field(default=BasisKind.GENERAL7)

    @property
    def matrix(self) -> np.ndarray:
        """Full step matrix ``U @ diag(D)``."""
        return self.unitary_matrix * self.dephasing_diag[np.newaxis, :]


def _unitary7(n: int, k: int) -> np.ndarray:
    t = 2.0 / n
    r = 1.0 - t
    m = n - k - 1
    sq = math.sqrt
    kk1 = sq(k * (k - 1))
    cols = [
        # U(sigma_1)
        [r * r, t * t * kk1, t * t * m, -r * t * sq(2 * k),
         t * t * sq(2 * k * m), -r * t * sq(2 * m), t * t * sq(k)],
        # U(sigma_2)
        [t * t * kk1, 1 + t * (k - 1) * (t * k - 2), t * t * m * kk1,
         t * (t * k - 1) * sq(2 * (k - 1)), t * (t * k - 1) * sq(2 * m * (k - 1)),
         t * t * sq(2 * m * k * (k - 1)), t * (t * k - 2) * sq(k - 1)],
        # U(sigma_3)
        [t * t * m, t * t * m * kk1, (1 - t * m) ** 2, t * t * m * sq(2 * k),
         -sq(k) * t * (1 - t * m) * sq(2 * m), -t * (1 - t * m) * sq(2 * m),
         t * t * m * sq(k)],
        # U(sigma_4)
        [t * r * sq(2 * k), sq(2) * t * (1 - t * k) * sq(k - 1), -t * t * m * sq(2 * k),
         -(r - t * k * (1 - 2 * t)), t * (1 - 2 * t * k) * sq(m),
         t * (1 - 2 * t) * sq(m * k), sq(2) * t * (1 - t * k)],
        # U(sigma_5)
        [t * t * sq(2 * m * k), t * (t * k - 1) * sq(2 * m) * sq(k - 1),
         t * (t * m - 1) * sq(2 * m * k), t * (2 * t * k - 1) * sq(m),
         2 * t * t * m * k - r, t * (2 * t * m - 1) * sq(k),
         t * (t * k - 1) * sq(2 * m)],
        # U(sigma_6)
        [t * r * sq(2 * m), -t * t * sq(2 * m * k) * sq(k - 1), -t * (t * m - 1) * sq(2 * m),
         t * (1 - 2 * t) * sq(m * k), t * (1 - 2 * t * m) * sq(k),
         1 - t * k - 2 * t * t * m, -t * t * sq(2 * m * k)],
        # U(sigma_7)
        [t * t * sq(k), -t * (2 - t * k) * sq(k - 1), t * t * m * sq(k),
         sq(2) * t * (t * k - 1), sq(2) * t * (t * k - 1) * sq(m),
         t * t * sq(2 * m * k), 1 - 2 * t + t * t * k],
    ]
    return np.array(cols, dtype=float).T


def _unitary6(n: int, k: int) -> np.ndarray:
    # sigma_2 and sigma_7 merged into the full noisy block; the sigma_2
    # coefficient of every image picks up sqrt(k/(k-1)), written here so it
    # stays finite at k = 1.
    t = 2.0 / n
    r = 1.0 - t
    m = n - k - 1
    sq = math.sqrt
    cols = [
        [r * r, t * t * k, t * t * m, -r * t * sq(2 * k),
         t * t * sq(2 * k * m), -r * t * sq(2 * m)],
        [t * t * k, (1 - t * k) ** 2, t * t * k * m, -t * sq(2 * k) * (1 - t * k),
         -t * sq(2 * k * m) * (1 - t * k), t * t * k * sq(2 * m)],
        [t * t * m, t * t * m * k, (1 - t * m) ** 2, t * t * m * sq(2 * k),
         -sq(k) * t * (1 - t * m) * sq(2 * m), -t * (1 - t * m) * sq(2 * m)],
        [t * r * sq(2 * k), sq(2) * t * (1 - t * k) * sq(k), -t * t * m * sq(2 * k),
         -(r - t * k * (1 - 2 * t)), t * (1 - 2 * t * k) * sq(m),
         t * (1 - 2 * t) * sq(m * k)],
        [t * t * sq(2 * m * k), t * (t * k - 1) * sq(2 * m * k),
         t * (t * m - 1) * sq(2 * m * k), t * (2 * t * k - 1) * sq(m),
         2 * t * t * m * k - r, t * (2 * t * m - 1) * sq(k)],
        [t * r * sq(2 * m), -t * t * k * sq(2 * m), -t * (t * m - 1) * sq(2 * m),
         t * (1 - 2 * t) * sq(m * k), t * (1 - 2 * t * m) * sq(k),
         1 - t * k - 2 * t * t * m],
    ]
    return np.array(cols, dtype=float).T


def _unitary4(n: int) -> np.ndarray:
    t = 2.0 / n
    r = 1.0 - t
    sq = math.sqrt
    cols = [
        [r * r, t * sq(2 * r * (1 + r)), -r * sq(2 * t * (1 + r)), t * sq(t * (1 + r))],
        [t * sq(2 * r * (1 + r)), 1 - 2 * r * t, 2 * r * sq(r * t), -t * sq(2 * r * t)],
        [r * sq(2 * t * (1 + r)), -2 * r * sq(r * t), 2 * r * r - 1, -sq(2) * r * t],
        # sigma_2 entry is -t*sqrt(2rt): the k = N - 1 limit of the 7-dim rule
        # and the value that keeps the matrix orthogonal.
        [t * sq(t * (1 + r)), -t * sq(2 * r * t), sq(2) * r * t, r * (1 + t)],
    ]
    return np.array(cols, dtype=float).T


def _check_noise(spec: ProblemSpec, noise: NoiseParams) -> None:
    basis = spec.basis_kind
    if basis is BasisKind.EQUAL4:
        ref = NoiseParams.equal_treatment(noise.p, noise.q)
        if abs(ref.s - noise.s) > 1e-14 or abs(ref.w - noise.w) > 1e-14:
            raise ValueError(
                "equal4 basis needs s = p + q - pq and w = 2p - p^2 "
                f"(got p={noise.p}, q={noise.q}, s={noise.s}, w={noise.w})"
            )
    elif basis is BasisKind.COUPLED6 and spec.noisy_count >= 2 and noise.w != 0.0:
        raise ValueError(
            f"coupled6 basis with k={spec.noisy_count} cannot damp the noisy "
            f"block (w={noise.w}); use the general7 basis"
        )


def build_step(spec: ProblemSpec, noise: NoiseParams) -> ReducedStep:
    """Matrix form of the unitary and the dephasing in the active basis."""
    _check_noise(spec, noise)
    n, k = spec.n_elements, spec.noisy_count
    p, q, s, w = noise.p, noise.q, noise.s, noise.w
    if spec.basis_kind is BasisKind.GENERAL7:
        u = _unitary7(n, k)
        d = [1.0, 1 - w, 1.0, 1 - s, 1 - p, 1 - q, 1.0]
    elif spec.basis_kind is BasisKind.COUPLED6:
        u = _unitary6(n, k)
        d = [1.0, 1.0, 1.0, 1 - s, 1 - p, 1 - q]
    else:
        u = _unitary4(n)
        d = [1.0, (1 - p) ** 2, (1 - p) * (1 - q), 1.0]
    return ReducedStep(u, np.array(d, dtype=float), spec.basis_kind)


def initial_state(spec: ProblemSpec) -> np.ndarray:
    """Sigma-basis coefficients of the uniform superposition ``|s><s|``."""
    t, r = spec.t, spec.r
    k, m = spec.noisy_count, spec.clean_count
    sq = math.sqrt
    if spec.basis_kind is BasisKind.GENERAL7:
        a = [1, sq(k * (k - 1)), m, sq(2 * k), sq(2 * m * k), sq(2 * m), sq(k)]
        return t / 2 * np.array(a, dtype=float)
    if spec.basis_kind is BasisKind.COUPLED6:
        a = [1, k, m, sq(2 * k), sq(2 * k * m), sq(2 * m)]
        return t / 2 * np.array(a, dtype=float)
    a = [t, sq(2 * r * (1 + r)), sq(2 * t * (1 + r)), sq(t * (1 + r))]
    return 0.5 * np.array(a, dtype=float)


def step(state: np.ndarray, reduced_step: ReducedStep) -> np.ndarray:
    """Apply dephasing, then the unitary."""
    state = np.asarray(state, dtype=float)
    if state.shape != reduced_step.dephasing_diag.shape:
        raise ValueError(
            f"state has shape {state.shape}, step expects "
            f"{reduced_step.dephasing_diag.shape}"
        )
    return reduced_step.unitary_matrix @ (reduced_step.dephasing_diag * state)


def success_probability(state: np.ndarray) -> float:
    return float(state[0])


def trace_weights(spec: ProblemSpec) -> np.ndarray:
    """Traces of the basis operators; ``trace_of(a) = weights @ a``."""
    k = spec.noisy_count
    if spec.basis_kind is BasisKind.GENERAL7:
        return np.array([1.0, 0, 1.0, 0, 0, 0, math.sqrt(k)])
    if spec.basis_kind is BasisKind.COUPLED6:
        return np.array([1.0, 1.0, 1.0, 0, 0, 0])
    # sigma_7 built on all N - 1 normals; sqrt(N-1) == sqrt((1+r)/t).
    return np.array([1.0, 0, 0, math.sqrt(spec.n_elements - 1)])


def trace_of(state: np.ndarray, spec: ProblemSpec) -> float:
    return float(trace_weights(spec) @ np.asarray(state, dtype=float))


def evolve(spec: ProblemSpec, noise: NoiseParams, steps: int) -> EvolutionTrace:
    """Success probability for ``m = 0..steps`` starting from ``|s><s|``."""
    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps}")
    mat = build_step(spec, noise).matrix
    a = initial_state(spec)
    out = np.empty(steps + 1)
    out[0] = a[0]
    for m in range(1, steps + 1):
        a = mat @ a
        out[m] = a[0]
    return EvolutionTrace(
        steps=np.arange(steps + 1),
        columns={"p_reduced": out},
        meta={
            "n_elements": spec.n_elements,
            "noisy_count": spec.noisy_count,
            "noise_kind": spec.noise_kind.value,
            "target_noisy": spec.target_noisy,
            "basis": spec.basis_kind.value,
            "noise": {"p": noise.p, "q": noise.q, "s": noise.s, "w": noise.w},
        },
    )
