"""Quantum-walk search on a star graph with randomly phase-shifting spokes.

Edge states: ``|0,j>`` (leaving the centre toward spoke ``j``) live at array
index ``j - 1``; ``|j,0>`` (returning to the centre) at ``N + j - 1``.  The
centre applies the inversion about average, ordinary spokes reflect, and
the target spoke 1 reflects with a sign flip.  A faulty spoke ``x``
multiplies ``|0,x>`` by ``exp(i phi)`` with ``phi`` redrawn every step.

Two walk steps started from outgoing states equal one Grover step, and the
phase-averaged channel is decoupled dephasing on the faulty outgoing
edges, so the walk maps onto the decoupled-noise Grover model with a clean
target.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .full_sim import ResourceLimitError, apply_decoupled_dephasing, max_n
from .reduced_dynamics import NoiseKind, NoiseParams, ProblemSpec, noise_params, select_basis
from .trace import EvolutionTrace

SYMMETRY_TOL = 1e-9
NORM_TOL = 1e-9


class DensityKind(str, enum.Enum):
    UNIFORM = "uniform"
    POINT_MASS = "point_mass"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PhaseDensity:
    """Symmetric phase distribution on ``[-a, a]``.

    ``UNIFORM`` is flat on ``[-a, a]``.  ``POINT_MASS`` puts weight 1/2 on
    each of ``+-phi0`` (a single atom at 0 when ``phi0 == 0``).  ``CUSTOM``
    is a tabulated density on a grid symmetric about zero.
    """

    kind: DensityKind
    a: float = 0.0
    grid: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", DensityKind(self.kind))
        if self.kind is DensityKind.UNIFORM and not 0 < self.a <= math.pi:
            raise ValueError(f"uniform half-width must lie in (0, pi], got {self.a}")
        if self.kind is DensityKind.POINT_MASS and not 0 <= self.a <= math.pi:
            raise ValueError(f"point-mass phase must lie in [0, pi], got {self.a}")
        if self.kind is DensityKind.CUSTOM:
            self._check_custom()

    @classmethod
    def uniform(cls, a: float) -> "PhaseDensity":
        return cls(DensityKind.UNIFORM, float(a))

    @classmethod
    def point_mass(cls, phi0: float = 0.0) -> "PhaseDensity":
        return cls(DensityKind.POINT_MASS, abs(float(phi0)))

    @classmethod
    def tabulated(cls, grid, values, normalize: bool = True) -> "PhaseDensity":
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if normalize:
            values = values / integrate.simpson(values, x=grid)
        return cls(DensityKind.CUSTOM, float(grid[-1]), tuple(grid), tuple(values))

    def _check_custom(self):
        x = np.asarray(self.grid)
        y = np.asarray(self.values)
        if x.ndim != 1 or x.shape != y.shape or len(x) < 3:
            raise ValueError("custom density needs matching 1-d grid and values (>= 3 points)")
        if np.any(np.diff(x) <= 0):
            raise ValueError("custom density grid must be strictly increasing")
        if np.any(y < 0):
            raise ValueError("custom density has negative values")
        if not math.isclose(x[0], -x[-1], abs_tol=SYMMETRY_TOL) or x[-1] > math.pi:
            raise ValueError("custom density must be supported on [-a, a] with a <= pi")
        if np.max(np.abs(x + x[::-1])) > SYMMETRY_TOL or np.max(np.abs(y - y[::-1])) > SYMMETRY_TOL:
            raise ValueError("custom density is not symmetric around 0")
        total = integrate.simpson(y, x=x)
        if abs(total - 1) > NORM_TOL:
            raise ValueError(f"custom density integrates to {total}, not 1")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind is DensityKind.UNIFORM:
            return rng.uniform(-self.a, self.a, size)
        if self.kind is DensityKind.POINT_MASS:
            if self.a == 0:
                return np.zeros(size)
            return self.a * rng.choice([-1.0, 1.0], size)
        x = np.asarray(self.grid)
        y = np.asarray(self.values)
        cdf = integrate.cumulative_trapezoid(y, x, initial=0.0)
        return np.interp(rng.uniform(0.0, cdf[-1], size), cdf, x)


def averaged_dephasing_factor(density: PhaseDensity) -> float:
    """Rate ``p`` with ``1 - p = E[exp(i phi)] = 2 int_0^a pi(phi) cos(phi) dphi``."""
    if density.kind is DensityKind.UNIFORM:
        a = density.a
        val, _ = integrate.quad(lambda phi: math.cos(phi) / (2 * a), 0.0, a, epsabs=1e-14)
        one_minus_p = 2 * val
    elif density.kind is DensityKind.POINT_MASS:
        one_minus_p = math.cos(density.a)
    else:
        x = np.asarray(density.grid)
        one_minus_p = integrate.simpson(np.asarray(density.values) * np.cos(x), x=x)
    if one_minus_p < -1e-12:
        raise ValueError(
            f"phase density gives E[cos phi] = {one_minus_p} < 0; no dephasing rate in [0, 1]"
        )
    return float(min(1.0, max(0.0, 1.0 - one_minus_p)))


@dataclass(frozen=True)
class StarWalkSpec:
    spokes: int
    faulty_set: frozenset[int]
    phase_density: PhaseDensity = field(default_factory=lambda: PhaseDensity.point_mass(0.0))

    def __post_init__(self):
        object.__setattr__(self, "faulty_set", frozenset(int(x) for x in self.faulty_set))
        if self.spokes < 4:
            raise ValueError(f"need at least 4 spokes, got {self.spokes}")
        bad = [x for x in self.faulty_set if not 2 <= x <= self.spokes]
        if bad:
            raise ValueError(
                f"faulty spokes must lie in 2..{self.spokes} (target 1 excluded): {sorted(bad)}"
            )

    @classmethod
    def first_k(cls, spokes: int, k: int, density: PhaseDensity) -> "StarWalkSpec":
        return cls(spokes, frozenset(range(2, k + 2)), density)

    @property
    def dim(self) -> int:
        return 2 * self.spokes


def walk_unitary(spokes: int) -> np.ndarray:
    """One walk step on the ``2N`` edge states."""
    n = spokes
    g = np.full((n, n), 2.0 / n) - np.eye(n)
    reflect = np.eye(n)
    reflect[0, 0] = -1.0
    w = np.zeros((2 * n, 2 * n))
    w[:n, n:] = g  # |j,0> -> sum_k G_kj |0,k>
    w[n:, :n] = reflect  # |0,j> -> +-|j,0>
    return w


def initial_walk_state(spokes: int) -> np.ndarray:
    psi = np.zeros(2 * spokes)
    psi[:spokes] = 1.0 / math.sqrt(spokes)
    return psi


def averaged_channel(rho: np.ndarray, walk_spec: StarWalkSpec, p: float | None = None) -> np.ndarray:
    """Phase-averaged noise on a ``2N x 2N`` density matrix."""
    if p is None:
        p = averaged_dephasing_factor(walk_spec.phase_density)
    # Outgoing |0,x> sits at 1-based position x.
    return apply_decoupled_dephasing(rho, walk_spec.faulty_set, p)


def map_walk_to_grover(walk_spec: StarWalkSpec) -> tuple[ProblemSpec, NoiseParams]:
    """Equivalent decoupled-noise Grover problem (one Grover step = two walk steps)."""
    p = averaged_dephasing_factor(walk_spec.phase_density)
    spec = select_basis(walk_spec.spokes, len(walk_spec.faulty_set), NoiseKind.DECOUPLED, False)
    return spec, noise_params(spec, p)


def _check_cap(walk_spec: StarWalkSpec):
    cap = max_n()
    if walk_spec.spokes > cap:
        raise ResourceLimitError(f"spokes={walk_spec.spokes} exceeds cap {cap}")


def simulate_walk_averaged(walk_spec: StarWalkSpec, grover_steps: int) -> EvolutionTrace:
    """Density-matrix walk under the averaged channel, sampled every two steps."""
    _check_cap(walk_spec)
    w = walk_unitary(walk_spec.spokes)
    p = averaged_dephasing_factor(walk_spec.phase_density)
    mask = averaged_channel(np.ones((walk_spec.dim, walk_spec.dim)), walk_spec, p)
    psi = initial_walk_state(walk_spec.spokes)
    rho = np.outer(psi, psi)
    out = np.empty(grover_steps + 1)
    out[0] = rho[0, 0]
    for m in range(1, grover_steps + 1):
        for _ in range(2):
            rho = w @ (rho * mask) @ w.T
        out[m] = rho[0, 0]
    return EvolutionTrace(
        np.arange(grover_steps + 1),
        {"p_walk": out},
        {"spokes": walk_spec.spokes, "faulty": sorted(walk_spec.faulty_set),
         "p": p, "walk_steps_per_record": 2},
    )


def shot_generator(seed: int, shot: int) -> np.random.Generator:
    """Philox stream for one shot, keyed by ``(seed, shot)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(shot,))))


def simulate_walk_montecarlo(
    walk_spec: StarWalkSpec,
    grover_steps: int,
    shots: int,
    seed: int,
    batch: int = 2048,
) -> EvolutionTrace:
    """Pure-state trajectories with fresh phases on every faulty spoke each step.

    Returns the mean target probability (``p_mc``) and its standard error.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    _check_cap(walk_spec)
    n = walk_spec.spokes
    w = walk_unitary(n).T
    faulty = np.array(sorted(walk_spec.faulty_set), dtype=int) - 1
    walk_steps = 2 * grover_steps
    prob = np.empty((shots, grover_steps + 1))

    for start in range(0, shots, batch):
        ids = range(start, min(start + batch, shots))
        if len(faulty):
            phases = np.stack([
                walk_spec.phase_density.sample(shot_generator(seed, i), (walk_steps, len(faulty)))
                for i in ids
            ])
            kicks = np.exp(1j * phases)
        psi = np.tile(initial_walk_state(n).astype(complex), (len(ids), 1))
        rows = slice(start, start + len(ids))
        prob[rows, 0] = np.abs(psi[:, 0]) ** 2
        for s in range(walk_steps):
            if len(faulty):
                psi[:, faulty] *= kicks[:, s, :]
            psi = psi @ w
            if s % 2 == 1:
                prob[rows, s // 2 + 1] = np.abs(psi[:, 0]) ** 2

    mean = prob.mean(axis=0)
    if shots > 1:
        stderr = prob.std(axis=0, ddof=1) / math.sqrt(shots)
    else:
        stderr = np.zeros_like(mean)
    return EvolutionTrace(
        np.arange(grover_steps + 1),
        {"p_mc": mean, "stderr": stderr},
        {"spokes": n, "faulty": sorted(walk_spec.faulty_set), "shots": shots,
         "seed": seed, "rng": "numpy Philox4x64, SeedSequence(seed, spawn_key=(shot,))"},
    )
