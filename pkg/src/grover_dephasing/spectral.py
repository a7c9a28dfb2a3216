"""Eigenvalues of the reduced step and first-order perturbation checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .reduced_dynamics import NoiseParams, build_step, initial_state, select_basis


class ConvergenceError(ArithmeticError):
    """The eigen-solver failed to converge."""


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: list[complex]
    predicted: list[complex]
    pairing: list[int]
    errors: list[float]

    @property
    def max_abs_error(self) -> float:
        return max(self.errors)

    def to_dict(self) -> dict:
        def cplx(z):
            return [float(z.real), float(z.imag)]

        return {
            "eigenvalues": [cplx(z) for z in self.eigenvalues],
            "predicted": [cplx(z) for z in self.predicted],
            "pairing": list(self.pairing),
            "errors": list(self.errors),
            "max_abs_error": self.max_abs_error,
        }


def eigenvalues(matrix) -> list[complex]:
    """All eigenvalues with multiplicity, sorted by (real, imag)."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    try:
        ev = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc
    return sorted((complex(z) for z in ev), key=lambda z: (z.real, z.imag))


def _theta(n: int) -> float:
    return math.acos(1.0 - 2.0 / n)


def unperturbed_eigenvectors(n: int) -> dict[str, np.ndarray]:
    """Eigenvectors of the noiseless 4-dim step: ``nu1``, ``nu2`` (eigenvalue 1)
    and ``nu_plus``/``nu_minus`` (eigenvalues ``exp(+-2i theta)``)."""
    t = 2.0 / n
    r = 1.0 - t
    sq = math.sqrt
    nu1 = np.array([sq(t), 0, 0, sq(1 + r)]) / sq(2)
    nu2 = np.array([sq(r * (1 + r)), sq(2), 0, -sq(r * t)]) / sq(2 * (1 + r))
    base = np.array([sq(1 + r), -sq(2 * r), 0, -sq(t)], dtype=complex)
    im = np.array([0, 0, sq(2 * (1 + r)), 0])
    scale = 2 * sq(1 + r)
    return {
        "nu1": nu1.astype(complex),
        "nu2": nu2.astype(complex),
        "nu_plus": (base + 1j * im) / scale,
        "nu_minus": (base - 1j * im) / scale,
    }


def inner(a, b) -> complex:
    """Hilbert-Schmidt inner product in the orthonormal sigma basis."""
    return complex(np.vdot(a, b))


def predicted_perturbed(n: int, p: float, q: float) -> list[complex]:
    """``[1, 1 - N p/(N-1), lambda_+, lambda_-]`` to first order in ``p, q``."""
    lam1 = 1 - n * p / (n - 1)
    damp = 1 - (2 * n - 3) * p / (2 * (n - 1)) - q / 2
    rot = complex(math.cos(2 * _theta(n)), math.sin(2 * _theta(n)))
    return [1.0 + 0j, complex(lam1), rot * damp, rot.conjugate() * damp]


def pair_nearest(computed, predicted) -> list[int]:
    """Match each prediction to a distinct computed eigenvalue.

    Greedy over all (prediction, eigenvalue) pairs by distance; ties are
    broken by the (real, imag) order of the eigenvalue.
    """
    computed = list(computed)
    cands = sorted(
        (abs(c - p), c.real, c.imag, i, j)
        for i, p in enumerate(predicted)
        for j, c in enumerate(computed)
    )
    pairing = [-1] * len(predicted)
    used = set()
    for _, _, _, i, j in cands:
        if pairing[i] < 0 and j not in used:
            pairing[i] = j
            used.add(j)
    return pairing


def verify_perturbation(n: int, p: float, q: float) -> SpectrumReport:
    """Compare the eigenvalues of the 4-dim noisy step with the first-order ones."""
    spec = select_basis(n, n - 1, "decoupled", q > 0)
    mat = build_step(spec, NoiseParams.equal_treatment(p, q)).matrix
    ev = eigenvalues(mat)
    pred = predicted_perturbed(n, p, q)
    pairing = pair_nearest(ev, pred)
    errors = [abs(ev[j] - z) for z, j in zip(pred, pairing)]
    return SpectrumReport(ev, pred, pairing, errors)


def overlaps_with_initial(n: int) -> dict[str, complex]:
    """``(nu_j, rho_init)`` for the unperturbed eigenvectors."""
    spec = select_basis(n, n - 1, "decoupled", False)
    init = initial_state(spec)
    return {name: inner(v, init) for name, v in unperturbed_eigenvectors(n).items()}
