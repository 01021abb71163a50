"""Single-trajectory integration API.

``step`` is the reference one-step map (Euler-Maruyama or semi-implicit
midpoint with the drift solved at the midpoint by four fixed-point
iterations; the Ito noise term always uses start-of-step amplitudes).
``integrate_trajectory`` runs the compiled batch kernel with a single row,
so a trajectory re-run on its own is bitwise identical to the same
trajectory inside any ensemble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .engine import IntegratorConfig
from .model import DivergenceError, ModelParams, PhasePoint, drift, noise_amplitudes
from .sampling import SubstreamKey, _initial_from_generator

__all__ = ["IntegratorConfig", "TrajectoryRecord", "step", "integrate_trajectory"]


@dataclass
class TrajectoryRecord:
    """Snapshots of one trajectory at the sample times, plus divergence state."""

    key: SubstreamKey
    snapshots: list  # list[PhasePoint], truncated at divergence
    diverged: bool = False
    divergence_time: float | None = None


def step(p: PhasePoint, params: ModelParams, cfg: IntegratorConfig,
         noise_draws: np.ndarray) -> PhasePoint:
    """Advance one step from p.t; noise draws are the six standard normals
    ordered (a1, a1+, a2, a2+, a3, a3+)."""
    w = np.asarray(noise_draws, dtype=np.float64)
    if w.shape != (6,):
        raise ValueError("expected six noise draws")
    dt = cfg.dt
    t = p.t
    v = p.as_vector()

    if cfg.scheme == "euler_maruyama":
        vd = v + dt * drift(p, params, t)
    else:
        tm = t + 0.5 * dt
        m = PhasePoint.from_vector(v, tm)
        for _ in range(4):
            m = PhasePoint.from_vector(v + 0.5 * dt * drift(m, params, tm), tm)
        vd = 2.0 * m.as_vector() - v

    vd = vd + noise_amplitudes(p, params, t) * w * math.sqrt(dt)
    out = PhasePoint.from_vector(vd, t + dt)
    if np.any(~(np.abs(vd) <= cfg.divergence_cap)):
        raise DivergenceError("trajectory exceeded the divergence cap", t=out.t)
    return out


def integrate_trajectory(key: SubstreamKey, params: ModelParams,
                         cfg: IntegratorConfig) -> TrajectoryRecord:
    """Integrate one trajectory from its substream; never raises on divergence,
    the record carries the truncated snapshots instead."""
    gen = key.generator()
    point = _initial_from_generator(params, gen)
    state0 = point.as_vector()[None, :]
    rows = engine.noise_rows(params, cfg)
    noise = gen.standard_normal((rows, 6))[None, :, :]
    _, snaps, div_step = engine.run_chunk_host(state0, noise, params, cfg, want_snaps=True)

    times = cfg.sample_times()
    n_sub = cfg.steps_per_sample
    if div_step[0] < 0:
        keep = cfg.n_samples
        diverged = False
        div_time = None
    else:
        # sample s exists iff the trajectory survived step s*n_sub
        d = int(div_step[0])
        keep = (d - 1) // n_sub + 1 if d > 0 else 0
        keep = min(keep, cfg.n_samples)
        diverged = True
        div_time = float(div_step[0]) * cfg.dt
    snapshots = [PhasePoint.from_vector(snaps[0, s], float(times[s])) for s in range(keep)]
    return TrajectoryRecord(key=key, snapshots=snapshots, diverged=diverged,
                            divergence_time=div_time)
