"""Moment accumulation and observable estimation.

Ensemble means of normally ordered monomials of the doubled phase-space
variables are operator expectation values, so everything reported here is
built from nine running sums per sample time:

    m1j = alphaplus_j alpha_j            -> <adag_j a_j>         (j = 1..3)
    m2j = alphaplus_j^2 alpha_j^2        -> <adag_j^2 a_j^2>
    c13 = alphaplus_1 alpha_3            -> <adag_1 a_3>
    c31 = alpha_1 alphaplus_3            -> <a_1 adag_3>
    q13 = m11 * m13                      -> <adag_1 a_1 adag_3 a_3>

From the means: number variances V(N_j) = m2j + m1j - m1j^2, the end-well
difference variance V(N1-N3) = V(N1) + V(N3) - 2(q13 - m11*m13), the
entanglement witness xi13 = c13*c31 - q13 (positive means wells 1 and 3 are
inseparable), and the steering variants xi13 - <N_k>/2.

Sums are partitioned into batches by trajectory index modulo B; standard
errors of every (generally nonlinear) statistic come from the delete-one-
batch jackknife.  Estimates are reported as real parts with the largest
imaginary residual tracked as a sampling-health diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_MONOMIALS = 9
MONOMIAL_NAMES = ("m11", "m12", "m13", "m21", "m22", "m23", "c13", "c31", "q13")
STAT_NAMES = ("n1", "n2", "n3", "vn1", "vn2", "vn3", "vn13", "xi13", "xis1", "xis3")


def phase_point_monomials(alpha: np.ndarray, alpha_plus: np.ndarray) -> np.ndarray:
    """The nine tracked monomials for one phase-space point.

    Products are associated exactly as in the compiled kernel so both paths
    agree bitwise.
    """
    a = np.asarray(alpha)
    p = np.asarray(alpha_plus)
    m11, m13 = p[0] * a[0], p[2] * a[2]
    return np.array([
        m11, p[1] * a[1], m13,
        p[0] * p[0] * a[0] * a[0], p[1] * p[1] * a[1] * a[1], p[2] * p[2] * a[2] * a[2],
        p[0] * a[2], a[0] * p[2], m11 * m13,
    ], dtype=np.complex128)


def xi13_from_moments(c13: complex, c31: complex, q13: complex) -> complex:
    """Hillery-Zubairy witness from the three cross moments."""
    return c13 * c31 - q13


def steering_from_moments(c13: complex, c31: complex, q13: complex,
                          n_k: complex) -> complex:
    """Steering variant: the witness pays an extra half quantum of mode k."""
    return xi13_from_moments(c13, c31, q13) - 0.5 * n_k


def stats_from_moments(m: np.ndarray) -> np.ndarray:
    """All reported statistics from moment means; broadcasts over leading axes.

    Input last axis is the monomial order of MONOMIAL_NAMES; output last axis
    follows STAT_NAMES.  Values stay complex so imaginary residuals survive.
    """
    m11, m12, m13 = m[..., 0], m[..., 1], m[..., 2]
    m21, m22, m23 = m[..., 3], m[..., 4], m[..., 5]
    c13, c31, q13 = m[..., 6], m[..., 7], m[..., 8]
    vn1 = m21 + m11 - m11 * m11
    vn2 = m22 + m12 - m12 * m12
    vn3 = m23 + m13 - m13 * m13
    vn13 = vn1 + vn3 - 2.0 * (q13 - m11 * m13)
    xi13 = c13 * c31 - q13
    return np.stack(
        [m11, m12, m13, vn1, vn2, vn3, vn13, xi13, xi13 - 0.5 * m11, xi13 - 0.5 * m13],
        axis=-1,
    )


@dataclass
class MomentAccumulator:
    """Batched running sums of the tracked monomials at every sample time."""

    times: np.ndarray  # (S,)
    sums: np.ndarray  # (B, S, N_MONOMIALS) complex128
    counts: np.ndarray  # (B,) int64
    n_excluded: int = 0

    @classmethod
    def empty(cls, times: np.ndarray, batches: int) -> "MomentAccumulator":
        if batches < 8:
            raise ValueError("need at least 8 batches for jackknife errors")
        times = np.asarray(times, dtype=np.float64)
        return cls(
            times=times,
            sums=np.zeros((batches, times.size, N_MONOMIALS), dtype=np.complex128),
            counts=np.zeros(batches, dtype=np.int64),
        )

    @property
    def batches(self) -> int:
        return self.counts.size

    @property
    def n_valid(self) -> int:
        return int(self.counts.sum())

    def add_chunk(self, mono: np.ndarray, start_index: int, valid: np.ndarray) -> None:
        """Fold one contiguous block of per-trajectory monomials into the sums.

        ``mono[i]`` belongs to global trajectory ``start_index + i``; rows with
        ``valid[i]`` False must already be zeroed and only affect the exclusion
        counter.  Reduction order is row order, so folding chunks in ascending
        start order is the canonical (bitwise reproducible) reduction.
        """
        b = self.batches
        c = mono.shape[0]
        offset = start_index % b
        # rotate batch labels so that row i belongs to batch (offset + i) % b
        full = (c // b) * b
        if full:
            block = mono[:full].reshape(c // b, b, *mono.shape[1:]).sum(axis=0)
            rolled = np.roll(block, offset, axis=0)
            self.sums += rolled
        for i in range(full, c):
            self.sums[(offset + i) % b] += mono[i]
        np.add.at(self.counts, (start_index + np.nonzero(valid)[0]) % b, 1)
        self.n_excluded += int(c - valid.sum())

    def add_record(self, snapshots_mono: np.ndarray, trajectory_index: int) -> None:
        """Add one trajectory's per-sample monomials (S, N_MONOMIALS)."""
        b = trajectory_index % self.batches
        self.sums[b] += snapshots_mono
        self.counts[b] += 1

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Fieldwise sum; the caller is responsible for a canonical fold order."""
        if self.batches != other.batches or self.times.size != other.times.size:
            raise ValueError("accumulators were built on different grids")
        if not np.array_equal(self.times, other.times):
            raise ValueError("accumulators were built on different grids")
        return MomentAccumulator(
            times=self.times.copy(),
            sums=self.sums + other.sums,
            counts=self.counts + other.counts,
            n_excluded=self.n_excluded + other.n_excluded,
        )


def accumulate(acc: MomentAccumulator, rec) -> MomentAccumulator:
    """Fold one TrajectoryRecord into the accumulator (diverged: counted only)."""
    if rec.diverged:
        acc.n_excluded += 1
        return acc
    if len(rec.snapshots) != acc.times.size:
        raise ValueError("record snapshot grid does not match the accumulator")
    mono = np.empty((acc.times.size, N_MONOMIALS), dtype=np.complex128)
    for s, point in enumerate(rec.snapshots):
        if abs(point.t - acc.times[s]) > 1e-12 * max(1.0, abs(acc.times[s])):
            raise ValueError("record sample times do not match the accumulator")
        mono[s] = phase_point_monomials(point.alpha, point.alpha_plus)
    acc.add_record(mono, rec.key.trajectory_index)
    return acc


@dataclass
class TimeSeriesResult:
    """Per-sample-time estimates with jackknife standard errors.

    ``values``/``ses`` are (S, n_stats) real arrays in STAT_NAMES order;
    ``imag`` and ``imag_ses`` are the matching imaginary parts and their own
    jackknife errors, used by the sampling-reality checks.
    """

    times: np.ndarray
    values: np.ndarray
    ses: np.ndarray
    imag: np.ndarray
    imag_ses: np.ndarray
    imag_residual: np.ndarray  # (S,) max |imag| over statistics
    n_valid: int
    n_excluded: int

    def stat(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        i = STAT_NAMES.index(name)
        return self.values[:, i], self.ses[:, i]


def finalize(acc: MomentAccumulator) -> TimeSeriesResult:
    """Grand means plus delete-one-batch jackknife errors for every statistic."""
    n = acc.n_valid
    if n == 0:
        raise ValueError("no valid trajectories were accumulated")
    b = acc.batches
    if n < b or (acc.counts == 0).any():
        raise ValueError("every batch needs at least one trajectory")

    total = acc.sums.sum(axis=0)  # (S, 9)
    grand = stats_from_moments(total / n)  # (S, n_stats) complex

    loo_counts = (n - acc.counts).astype(np.float64)  # (B,)
    loo_means = (total[None, :, :] - acc.sums) / loo_counts[:, None, None]
    loo_stats = stats_from_moments(loo_means)  # (B, S, n_stats)
    centred = loo_stats - loo_stats.mean(axis=0, keepdims=True)
    factor = (b - 1) / b
    se_re = np.sqrt(factor * np.sum(centred.real ** 2, axis=0))
    se_im = np.sqrt(factor * np.sum(centred.imag ** 2, axis=0))

    return TimeSeriesResult(
        times=acc.times.copy(),
        values=grand.real,
        ses=se_re,
        imag=grand.imag,
        imag_ses=se_im,
        imag_residual=np.max(np.abs(grand.imag), axis=-1),
        n_valid=n,
        n_excluded=acc.n_excluded,
    )


def steering_witnesses(acc: MomentAccumulator) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Both directional steering witnesses with their errors: (w1, se1, w3, se3)."""
    res = finalize(acc)
    w1, se1 = res.stat("xis1")
    w3, se3 = res.stat("xis3")
    return w1, se1, w3, se3


def jackknife_stat(acc: MomentAccumulator, fn) -> tuple[np.ndarray, np.ndarray]:
    """Value and jackknife error of an arbitrary function of the moment means.

    ``fn`` maps a (..., N_MONOMIALS) complex array to (...); used for derived
    quantities that are not part of the standard report, e.g. the total atom
    number or the well-1/3 population asymmetry.
    """
    n = acc.n_valid
    if n == 0:
        raise ValueError("no valid trajectories were accumulated")
    total = acc.sums.sum(axis=0)
    grand = fn(total / n)
    loo_counts = (n - acc.counts).astype(np.float64)
    loo = fn((total[None, :, :] - acc.sums) / loo_counts[:, None, None])
    centred = loo - loo.mean(axis=0, keepdims=True)
    se = np.sqrt((acc.batches - 1) / acc.batches * np.sum(np.abs(centred) ** 2, axis=0))
    return np.real(grand), se
