"""Physical model of the three-well Bose-Hubbard beamsplitter.

Three bosonic modes in a linear chain, nearest-neighbour tunnelling J
(wells 1-2 and 2-3) and an on-site collisional nonlinearity chi.  In the
doubled phase space of the positive-P representation each trajectory
carries six complex amplitudes (alpha_1..3, alphaplus_1..3) whose Ito
equations of motion are

    d alpha_j     = (-2i chi alphaplus_j alpha_j^2 + iJ sum_nn alpha_k) dt
                    + sqrt(-2i chi) alpha_j dW
    d alphaplus_j = (+2i chi alphaplus_j^2 alpha_j - iJ sum_nn alphaplus_k) dt
                    + sqrt(+2i chi) alphaplus_j dW'

with independent real Gaussian white noises for each of the six
equations.  alphaplus_j is an independent variable, not the conjugate of
alpha_j; only ensemble means of monomials have operator meaning.

Couplings can be pulsed off at a fixed time (hard step), which is how the
beamsplitter output is frozen at the first population-transfer maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

N_WELLS = 3

# First time of maximal population transfer out of the middle well for
# J = 1: the linear chain oscillates as cos^2(sqrt(2) J t).
FIRST_TRANSFER_TIME = math.pi / (2.0 * math.sqrt(2.0))


class DivergenceError(RuntimeError):
    """A trajectory left the usable region of phase space."""

    def __init__(self, message: str, t: float | None = None, key=None):
        super().__init__(message)
        self.t = t
        self.key = key


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant coupling: ``base_value`` until ``cutoff_time``, then 0.

    ``cutoff_time=None`` means the coupling is never switched off.
    """

    base_value: float
    cutoff_time: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.base_value):
            raise ValueError("schedule base value must be finite")
        if self.cutoff_time is not None and not math.isfinite(self.cutoff_time):
            raise ValueError("schedule cutoff time must be finite")

    def value(self, t: float) -> float:
        if self.cutoff_time is not None and t >= self.cutoff_time:
            return 0.0
        return self.base_value

    @property
    def cutoff_or_inf(self) -> float:
        """Cutoff as a float, +inf when the schedule never switches off."""
        return math.inf if self.cutoff_time is None else self.cutoff_time


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: couplings, atom number and initial state."""

    j_schedule: Schedule
    chi_schedule: Schedule
    n_atoms: int
    initial_state_kind: str = "fock"  # "fock" | "coherent"
    initial_well: int = 2  # 1-based
    n_wells: int = N_WELLS

    def __post_init__(self):
        if self.n_wells != N_WELLS:
            raise ValueError("only the three-well chain is supported")
        if self.initial_well not in (1, 2, 3):
            raise ValueError("initial_well must be 1, 2 or 3")
        if self.n_atoms < 0:
            raise ValueError("n_atoms must be non-negative")
        if self.initial_state_kind not in ("fock", "coherent"):
            raise ValueError("initial_state_kind must be 'fock' or 'coherent'")
        if self.j_schedule.base_value < 0:
            raise ValueError("J must be non-negative")
        if self.chi_schedule.base_value < 0:
            raise ValueError("chi must be non-negative")


@dataclass
class PhasePoint:
    """One trajectory's doubled phase-space coordinates at time ``t``.

    ``alpha[j]`` and ``alpha_plus[j]`` are independent complex amplitudes;
    their product averages to the mode-j occupation over the ensemble.
    """

    alpha: np.ndarray  # shape (3,), complex128
    alpha_plus: np.ndarray  # shape (3,), complex128
    t: float = 0.0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.complex128)
        self.alpha_plus = np.asarray(self.alpha_plus, dtype=np.complex128)
        if self.alpha.shape != (3,) or self.alpha_plus.shape != (3,):
            raise ValueError("PhasePoint needs 3 amplitudes per branch")

    def as_vector(self) -> np.ndarray:
        """Interleaved (a1, ap1, a2, ap2, a3, ap3) complex vector."""
        v = np.empty(6, dtype=np.complex128)
        v[0::2] = self.alpha
        v[1::2] = self.alpha_plus
        return v

    @classmethod
    def from_vector(cls, v: np.ndarray, t: float) -> "PhasePoint":
        v = np.asarray(v, dtype=np.complex128)
        return cls(alpha=v[0::2].copy(), alpha_plus=v[1::2].copy(), t=t)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.alpha)) and np.all(np.isfinite(self.alpha_plus)))


def drift(p: PhasePoint, params: ModelParams, t: float) -> np.ndarray:
    """Deterministic part of the six Ito equations, interleaved like as_vector().

    Raises DivergenceError on non-finite input.
    """
    if not p.is_finite():
        raise DivergenceError("non-finite phase-space point passed to drift", t=t)
    j = params.j_schedule.value(t)
    chi = params.chi_schedule.value(t)
    a = p.alpha
    ap = p.alpha_plus
    out = np.empty(6, dtype=np.complex128)
    # tunnelling partners along the 1-2-3 chain
    nn = (a[1], a[0] + a[2], a[1])
    nnp = (ap[1], ap[0] + ap[2], ap[1])
    for w in range(3):
        out[2 * w] = -2j * chi * ap[w] * a[w] * a[w] + 1j * j * nn[w]
        out[2 * w + 1] = 2j * chi * ap[w] * ap[w] * a[w] - 1j * j * nnp[w]
    return out


def noise_amplitudes(p: PhasePoint, params: ModelParams, t: float) -> np.ndarray:
    """Multiplicative noise amplitudes b so that each increment is b*w*sqrt(dt).

    The radicands -2i*chi*alpha^2 and +2i*chi*alphaplus^2 are factored
    analytically as ((1-i)sqrt(chi) alpha)^2 and ((1+i)sqrt(chi) alphaplus)^2,
    which avoids branch-cut jumps along a trajectory; the sign freedom is
    irrelevant because the noises are symmetric.
    """
    if not p.is_finite():
        raise DivergenceError("non-finite phase-space point passed to noise_amplitudes", t=t)
    chi = params.chi_schedule.value(t)
    root = math.sqrt(chi)
    out = np.empty(6, dtype=np.complex128)
    out[0::2] = (1.0 - 1.0j) * root * p.alpha
    out[1::2] = (1.0 + 1.0j) * root * p.alpha_plus
    return out
