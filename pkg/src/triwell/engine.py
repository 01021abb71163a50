"""Vectorized trajectory engine.

Trajectories are embarrassingly parallel: each owns a random substream
derived from (master seed, trajectory index) and is integrated by a compiled
kernel that only ever touches its own rows.  Threads therefore cannot change any
result; reductions into batch accumulators happen afterwards in a fixed
order (chunks ascending, trajectory index ascending within a chunk), so the
output is bitwise identical for any worker count.

Noise-consumption contract per trajectory, in order:

1. initial-state draws (occupied well only: Gamma radius^2, uniform phase,
   two normals for the offset; coherent and empty wells draw nothing);
2. one standard normal per step per equation, laid out (step, equation)
   with equations ordered (a1, a1+, a2, a2+, a3, a3+).

The same contract is used whether a trajectory is run alone or inside a
chunk, which is what makes single-trajectory reruns bitwise identical to
their batched counterparts.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

# the TBB fallback notice is noise on boxes with an older TBB; the omp and
# workqueue layers behave identically for this workload
warnings.filterwarnings("ignore", message="The TBB threading layer requires TBB version")

from .estimator import N_MONOMIALS, MomentAccumulator
from .model import ModelParams
from .sampling import SubstreamKey, _initial_from_generator

SCHEME_EULER = 0
SCHEME_MIDPOINT = 1
SCHEME_IDS = {"euler_maruyama": SCHEME_EULER, "semi_implicit_midpoint": SCHEME_MIDPOINT}

# Noise buffers per chunk are capped around this many bytes.
_NOISE_BUDGET = 192 * 1024 * 1024


@dataclass(frozen=True)
class IntegratorConfig:
    """Time grid and scheme for the Ito integration."""

    dt: float = 1e-3
    scheme: str = "semi_implicit_midpoint"
    sample_interval: float = 1e-2
    t_final: float = 10.0
    divergence_cap: float = 1e6

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.divergence_cap <= 0:
            raise ValueError("divergence_cap must be positive")
        if self.scheme not in SCHEME_IDS:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.sample_interval <= 0 or self.t_final < 0:
            raise ValueError("sample_interval must be positive and t_final non-negative")
        n_sub = round(self.sample_interval / self.dt)
        if n_sub < 1 or abs(n_sub * self.dt - self.sample_interval) > 1e-9 * self.sample_interval:
            raise ValueError("sample_interval must be an integer multiple of dt")
        n_int = round(self.t_final / self.sample_interval)
        if abs(n_int * self.sample_interval - self.t_final) > 1e-9 * max(self.sample_interval, 1.0):
            raise ValueError("t_final must be an integer multiple of sample_interval")

    @property
    def steps_per_sample(self) -> int:
        return round(self.sample_interval / self.dt)

    @property
    def n_samples(self) -> int:
        return round(self.t_final / self.sample_interval) + 1

    @property
    def n_steps(self) -> int:
        return (self.n_samples - 1) * self.steps_per_sample

    def sample_times(self) -> np.ndarray:
        # identical float ops to the kernel's t = step*dt
        steps = np.arange(self.n_samples, dtype=np.int64) * self.steps_per_sample
        return steps.astype(np.float64) * self.dt


@dataclass
class DivergenceReport:
    """Bookkeeping for trajectories excluded from the averages."""

    n_total: int = 0
    n_diverged: int = 0
    first_indices: list = field(default_factory=list)
    first_times: list = field(default_factory=list)

    @property
    def fraction(self) -> float:
        return self.n_diverged / self.n_total if self.n_total else 0.0


@njit(cache=True)
def _one_traj(state0, noise, dt, n_sub, n_samples, jb, jcut, cb, ccut, rcb,
              scheme, cap, mono, snaps, want_snaps):
    """Integrate one trajectory; returns the divergence step or -1.

    Writes normally-ordered monomials at every sample time into ``mono``
    (layout: m11, m12, m13, m21, m22, m23, c13, c31, q13) and, when asked,
    raw snapshots into ``snaps``.
    """
    a1 = state0[0]
    p1 = state0[1]
    a2 = state0[2]
    p2 = state0[3]
    a3 = state0[4]
    p3 = state0[5]

    if not (abs(a1) <= cap and abs(p1) <= cap and abs(a2) <= cap
            and abs(p2) <= cap and abs(a3) <= cap and abs(p3) <= cap):
        return 0

    mono[0, 0] = p1 * a1
    mono[0, 1] = p2 * a2
    mono[0, 2] = p3 * a3
    mono[0, 3] = p1 * p1 * a1 * a1
    mono[0, 4] = p2 * p2 * a2 * a2
    mono[0, 5] = p3 * p3 * a3 * a3
    mono[0, 6] = p1 * a3
    mono[0, 7] = a1 * p3
    mono[0, 8] = (p1 * a1) * (p3 * a3)
    if want_snaps:
        snaps[0, 0] = a1
        snaps[0, 1] = p1
        snaps[0, 2] = a2
        snaps[0, 3] = p2
        snaps[0, 4] = a3
        snaps[0, 5] = p3

    sd = math.sqrt(dt)
    half = 0.5 * dt
    step = 0
    for s in range(1, n_samples):
        for _ in range(n_sub):
            t = step * dt
            jt = jb if t < jcut else 0.0
            rc = rcb if t < ccut else 0.0
            ct = cb if t < ccut else 0.0

            if jt == 0.0 and ct == 0.0 and rc == 0.0:
                # every coupling is off (a cut one stays off), the step is
                # the identity for either scheme
                step += 1
                continue

            if scheme == SCHEME_MIDPOINT:
                tm = t + 0.5 * dt
                jm = jb if tm < jcut else 0.0
                cm = cb if tm < ccut else 0.0
                m1 = a1
                q1 = p1
                m2 = a2
                q2 = p2
                m3 = a3
                q3 = p3
                # four iterations leave the fixed-point defect ~1e3 below the
                # 1e-8*N long-horizon conservation budget; three sit exactly at it
                for _ in range(4):
                    d1 = -2j * cm * q1 * m1 * m1 + 1j * jm * m2
                    e1 = 2j * cm * q1 * q1 * m1 - 1j * jm * q2
                    d2 = -2j * cm * q2 * m2 * m2 + 1j * jm * (m1 + m3)
                    e2 = 2j * cm * q2 * q2 * m2 - 1j * jm * (q1 + q3)
                    d3 = -2j * cm * q3 * m3 * m3 + 1j * jm * m2
                    e3 = 2j * cm * q3 * q3 * m3 - 1j * jm * q2
                    m1 = a1 + half * d1
                    q1 = p1 + half * e1
                    m2 = a2 + half * d2
                    q2 = p2 + half * e2
                    m3 = a3 + half * d3
                    q3 = p3 + half * e3
                na1 = 2.0 * m1 - a1
                np1 = 2.0 * q1 - p1
                na2 = 2.0 * m2 - a2
                np2 = 2.0 * q2 - p2
                na3 = 2.0 * m3 - a3
                np3 = 2.0 * q3 - p3
            else:
                d1 = -2j * ct * p1 * a1 * a1 + 1j * jt * a2
                e1 = 2j * ct * p1 * p1 * a1 - 1j * jt * p2
                d2 = -2j * ct * p2 * a2 * a2 + 1j * jt * (a1 + a3)
                e2 = 2j * ct * p2 * p2 * a2 - 1j * jt * (p1 + p3)
                d3 = -2j * ct * p3 * a3 * a3 + 1j * jt * a2
                e3 = 2j * ct * p3 * p3 * a3 - 1j * jt * p2
                na1 = a1 + dt * d1
                np1 = p1 + dt * e1
                na2 = a2 + dt * d2
                np2 = p2 + dt * e2
                na3 = a3 + dt * d3
                np3 = p3 + dt * e3

            # Ito noise: amplitudes from the start-of-step state.  Noise rows
            # exist exactly for the steps with rc > 0 (prefix of the grid).
            if rc > 0.0:
                g = rc * sd
                na1 = na1 + (1.0 - 1.0j) * (g * noise[step, 0]) * a1
                np1 = np1 + (1.0 + 1.0j) * (g * noise[step, 1]) * p1
                na2 = na2 + (1.0 - 1.0j) * (g * noise[step, 2]) * a2
                np2 = np2 + (1.0 + 1.0j) * (g * noise[step, 3]) * p2
                na3 = na3 + (1.0 - 1.0j) * (g * noise[step, 4]) * a3
                np3 = np3 + (1.0 + 1.0j) * (g * noise[step, 5]) * p3

            a1 = na1
            p1 = np1
            a2 = na2
            p2 = np2
            a3 = na3
            p3 = np3
            step += 1

            if not (abs(a1) <= cap and abs(p1) <= cap and abs(a2) <= cap
                    and abs(p2) <= cap and abs(a3) <= cap and abs(p3) <= cap):
                return step

        mono[s, 0] = p1 * a1
        mono[s, 1] = p2 * a2
        mono[s, 2] = p3 * a3
        mono[s, 3] = p1 * p1 * a1 * a1
        mono[s, 4] = p2 * p2 * a2 * a2
        mono[s, 5] = p3 * p3 * a3 * a3
        mono[s, 6] = p1 * a3
        mono[s, 7] = a1 * p3
        mono[s, 8] = (p1 * a1) * (p3 * a3)
        if want_snaps:
            snaps[s, 0] = a1
            snaps[s, 1] = p1
            snaps[s, 2] = a2
            snaps[s, 3] = p2
            snaps[s, 4] = a3
            snaps[s, 5] = p3
    return -1


@njit(cache=True, parallel=True, nogil=True)
def _run_chunk(state0, noise, dt, n_sub, n_samples, jb, jcut, cb, ccut, rcb,
               scheme, cap, mono, snaps, want_snaps, div_step):
    for c in prange(state0.shape[0]):
        sn = snaps[c] if want_snaps else snaps[0]
        div_step[c] = _one_traj(state0[c], noise[c], dt, n_sub, n_samples,
                                jb, jcut, cb, ccut, rcb, scheme, cap,
                                mono[c], sn, want_snaps)


def _kernel_args(params: ModelParams, cfg: IntegratorConfig):
    chi = params.chi_schedule.base_value
    return (
        cfg.dt,
        cfg.steps_per_sample,
        cfg.n_samples,
        params.j_schedule.base_value,
        params.j_schedule.cutoff_or_inf,
        chi,
        params.chi_schedule.cutoff_or_inf,
        math.sqrt(chi),
        SCHEME_IDS[cfg.scheme],
        cfg.divergence_cap,
    )


def noise_rows(params: ModelParams, cfg: IntegratorConfig) -> int:
    """Number of steps that actually consume noise.

    The noise amplitude is sqrt(chi(t)) * amplitude, and chi only ever steps
    down to zero, so the consuming steps are the prefix with chi(t) > 0.
    Trajectory substreams therefore never generate normals for the silent
    tail, which is what makes pulsed runs cheap.
    """
    if params.chi_schedule.base_value == 0.0:
        return 0
    cut = params.chi_schedule.cutoff_or_inf
    if cut == math.inf:
        return cfg.n_steps
    # same float comparison as the kernel's t = step*dt < cutoff; the product
    # is monotone in the step index, so the consuming steps form a prefix
    steps = np.arange(cfg.n_steps, dtype=np.int64).astype(np.float64)
    return int(np.sum(steps * cfg.dt < cut))


def run_chunk_host(state0: np.ndarray, noise: np.ndarray, params: ModelParams,
                   cfg: IntegratorConfig, want_snaps: bool = False):
    """Integrate one block of trajectories from explicit initial states and noise.

    Returns (mono, snaps, div_step); ``snaps`` is None unless requested.
    The convergence tests drive this directly with Brownian-coupled noise
    arrays, so it must stay a thin, deterministic wrapper over the kernel.
    """
    c = state0.shape[0]
    n_samples = cfg.n_samples
    if noise.shape != (c, noise_rows(params, cfg), 6):
        raise ValueError("noise array shape does not match the configured grid")
    mono = np.zeros((c, n_samples, N_MONOMIALS), dtype=np.complex128)
    snaps = (np.zeros((c, n_samples, 6), dtype=np.complex128) if want_snaps
             else np.zeros((1, n_samples, 6), dtype=np.complex128))
    div_step = np.empty(c, dtype=np.int64)
    _run_chunk(np.ascontiguousarray(state0, dtype=np.complex128),
               np.ascontiguousarray(noise, dtype=np.float64),
               *_kernel_args(params, cfg), mono, snaps, want_snaps, div_step)
    return mono, (snaps if want_snaps else None), div_step


def _chunk_size(rows: int, batches: int) -> int:
    per_traj = max(rows, 1) * 6 * 8
    c = _NOISE_BUDGET // per_traj
    c = max(batches, min(4096, (c // batches) * batches))
    return int(c)


def _prepare_chunk(params: ModelParams, cfg: IntegratorConfig, seed: int,
                   start: int, count: int):
    rows = noise_rows(params, cfg)
    state0 = np.empty((count, 6), dtype=np.complex128)
    noise = np.empty((count, rows, 6), dtype=np.float64)
    for i in range(count):
        gen = SubstreamKey(seed, start + i).generator()
        point = _initial_from_generator(params, gen)
        state0[i] = point.as_vector()
        if rows:
            noise[i] = gen.standard_normal((rows, 6))
    return state0, noise


def simulate_ensemble(params: ModelParams, cfg: IntegratorConfig, n_traj: int,
                      seed: int, batches: int = 64, workers: int | None = None,
                      ) -> tuple[MomentAccumulator, DivergenceReport]:
    """Run ``n_traj`` trajectories and accumulate batch moment sums.

    Batch assignment is trajectory_index mod ``batches``; chunking and the
    reduction order are fixed functions of the configuration, never of the
    worker count.
    """
    if n_traj < batches:
        raise ValueError("need at least one trajectory per batch")
    if workers is None:
        workers = numba.get_num_threads()
    workers = max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(workers)

    acc = MomentAccumulator.empty(cfg.sample_times(), batches)
    report = DivergenceReport(n_total=n_traj)
    chunk = _chunk_size(noise_rows(params, cfg), batches)
    starts = list(range(0, n_traj, chunk))

    def prep(start):
        return _prepare_chunk(params, cfg, seed, start, min(chunk, n_traj - start))

    # Substream generation holds the GIL, the compiled kernel releases it, so
    # preparing the next chunk while the current one integrates overlaps the
    # two costs.  Chunk contents and the fold order below are fixed by the
    # configuration alone, so pipelining cannot change any output bit.
    pipeline = ThreadPoolExecutor(max_workers=1) if workers > 1 and len(starts) > 1 else None
    try:
        pending = pipeline.submit(prep, starts[0]) if pipeline else None
        for ci, start in enumerate(starts):
            if pipeline:
                state0, noise = pending.result()
                if ci + 1 < len(starts):
                    pending = pipeline.submit(prep, starts[ci + 1])
            else:
                state0, noise = prep(start)
            mono, _, div_step = run_chunk_host(state0, noise, params, cfg)
            valid = div_step < 0
            if not valid.all():
                bad = np.nonzero(~valid)[0]
                report.n_diverged += bad.size
                for i in bad[:16]:
                    report.first_indices.append(start + int(i))
                    report.first_times.append(float(div_step[i]) * cfg.dt)
                mono[~valid] = 0.0
            acc.add_chunk(mono, start, valid)
    finally:
        if pipeline:
            pipeline.shutdown(wait=False)
    return acc, report
