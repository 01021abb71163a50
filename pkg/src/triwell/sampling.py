"""Initial-state sampling in the positive-P representation.

Coherent states have a delta-function positive-P distribution, so they are
sampled deterministically at sqrt(N).  Fock states use the canonical
construction: a point mu drawn from the Husimi distribution of |n> (radius
squared ~ Gamma(n+1), phase uniform) plus an isotropic complex Gaussian
offset delta with Re/Im variance 1/2, giving

    alpha = mu + delta,   alphaplus = conj(mu - delta).

Ensemble averages of normally ordered monomials of (alpha, alphaplus) then
reproduce <adag^k a^k> = n!/(n-k)! exactly.  Empty wells are represented by
the exact delta at the origin rather than the n=0 cloud, which keeps their
sampling variance at zero.

Every trajectory owns its own random substream, derived from the master
seed and the trajectory index through a SeedSequence spawn key, so a sample
is a pure function of its key and any trajectory can be regenerated
independently of batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, PhasePoint


@dataclass(frozen=True)
class SubstreamKey:
    """Identifies one trajectory's random substream."""

    master_seed: int
    trajectory_index: int

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this substream."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.trajectory_index,))
        return np.random.Generator(np.random.PCG64(seq))


def sample_coherent(n_mean: float, key: SubstreamKey | None = None) -> tuple[complex, complex]:
    """Delta-distributed coherent-state sample: (sqrt(n_mean), sqrt(n_mean)).

    Deterministic; consumes no randomness.  The phase convention is real
    positive, which is immaterial for populations and the reported
    correlations.
    """
    if n_mean < 0:
        raise ValueError("coherent occupation must be non-negative")
    amp = math.sqrt(n_mean)
    return complex(amp), complex(amp)


def sample_fock(n: int, key: SubstreamKey) -> tuple[complex, complex]:
    """One canonical positive-P sample of the number state |n>."""
    if n < 0:
        raise ValueError("Fock occupation must be non-negative")
    gen = key.generator()
    return _fock_from_generator(n, gen)


def _fock_from_generator(n: int, gen: np.random.Generator) -> tuple[complex, complex]:
    # radius^2 ~ Gamma(n+1, 1) exactly (rejection sampler, no normal
    # approximation: the Gamma tail feeds <adag^2 a^2> directly)
    x = gen.gamma(shape=n + 1.0, scale=1.0)
    theta = gen.uniform(0.0, 2.0 * math.pi)
    mu = math.sqrt(x) * complex(math.cos(theta), math.sin(theta))
    d = gen.normal(loc=0.0, scale=math.sqrt(0.5), size=2)
    delta = complex(d[0], d[1])
    return mu + delta, (mu - delta).conjugate()


def sample_fock_batch(n: int, key: SubstreamKey, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized canonical Fock sampling: ``count`` draws from one substream.

    Same construction as sample_fock but with array draws (so the stream
    consumption differs from repeated scalar calls); meant for moment
    studies, not for per-trajectory reproducibility.
    """
    if n < 0:
        raise ValueError("Fock occupation must be non-negative")
    gen = key.generator()
    x = gen.gamma(shape=n + 1.0, scale=1.0, size=count)
    theta = gen.uniform(0.0, 2.0 * math.pi, size=count)
    mu = np.sqrt(x) * np.exp(1j * theta)
    d = gen.normal(loc=0.0, scale=math.sqrt(0.5), size=(count, 2))
    delta = d[:, 0] + 1j * d[:, 1]
    return mu + delta, np.conj(mu - delta)


def sample_initial(params: ModelParams, key: SubstreamKey) -> PhasePoint:
    """Draw the t=0 phase-space point: all atoms in one well, others empty."""
    gen = key.generator()
    return _initial_from_generator(params, gen)


def _initial_from_generator(params: ModelParams, gen: np.random.Generator) -> PhasePoint:
    """Initial sample drawing from an already-positioned generator.

    The batch engine reuses the same generator for the dynamical noise, so
    the draw order here (occupied well only) is part of the reproducibility
    contract.
    """
    alpha = np.zeros(3, dtype=np.complex128)
    alpha_plus = np.zeros(3, dtype=np.complex128)
    w = params.initial_well - 1
    if params.initial_state_kind == "coherent":
        a, ap = sample_coherent(params.n_atoms)
    else:
        a, ap = _fock_from_generator(params.n_atoms, gen)
    alpha[w] = a
    alpha_plus[w] = ap
    return PhasePoint(alpha=alpha, alpha_plus=alpha_plus, t=0.0)
