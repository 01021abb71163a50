"""Exact quantum dynamics in the three-mode number basis.

Ground truth for the stochastic engine: the Hamiltonian

    H/hbar = chi * sum_j adag_j^2 a_j^2
             - J (adag_1 a_2 + adag_2 a_1 + adag_3 a_2 + adag_2 a_3)

conserves total atom number, so Fock initial states live in one fixed-N
sector whose dimension is (N+1)(N+2)/2.  Propagation is by exact
exponential action per piecewise-constant coupling segment: a dense
eigendecomposition for desk-scale sectors, sparse expm_multiply above
that.  Segment boundaries coincide with schedule cutoffs, so no step ever
straddles a pulse edge.

Coherent initial states superpose number sectors.  Every observable
reported by this package conserves total number, hence cross-sector
coherences never contribute and the truncated Poissonian superposition can
be evaluated sector by sector with Poisson weights, which is exact.

Moment vectors follow the estimator's monomial layout so both pipelines
share one statistics formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply
from scipy.stats import poisson

from .estimator import N_MONOMIALS, stats_from_moments
from .model import ModelParams, Schedule

NORM_TOL = 1e-10
DENSE_EIG_MAX = 1500  # sector dimension above which propagation goes sparse


class StepSizeError(RuntimeError):
    """Propagation lost unitarity beyond the allowed norm drift."""


@dataclass(frozen=True)
class FockBasis:
    """Occupation basis of the fixed-total-number sector.

    States (n1, n2, n3) with n1+n2+n3 = n_total are ordered lexicographically
    in (n1, n2): index 0 is (0, 0, N), the last is (N, 0, 0).
    """

    n_total: int
    states: np.ndarray  # (D, 3) int64, read-only

    @classmethod
    @lru_cache(maxsize=256)
    def for_total(cls, n_total: int) -> "FockBasis":
        if n_total < 0:
            raise ValueError("total atom number must be non-negative")
        rows = [(n1, n2, n_total - n1 - n2)
                for n1 in range(n_total + 1)
                for n2 in range(n_total + 1 - n1)]
        states = np.array(rows, dtype=np.int64).reshape(len(rows), 3)
        states.setflags(write=False)
        return cls(n_total=n_total, states=states)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def index_of(self, n1: int, n2: int, n3: int) -> int:
        if n1 < 0 or n2 < 0 or n3 < 0 or n1 + n2 + n3 != self.n_total:
            raise ValueError("occupations outside this sector")
        n = self.n_total
        # states with smaller n1 fill rows of length (n - k + 1)
        return n1 * (2 * n + 3 - n1) // 2 + n2

    def indices(self, occ: np.ndarray) -> np.ndarray:
        """Vectorized index_of for an (M, 3) occupation array in this sector."""
        n = self.n_total
        return occ[:, 0] * (2 * n + 3 - occ[:, 0]) // 2 + occ[:, 1]


@dataclass
class QuantumState:
    """State vector over one fixed-number sector at time t."""

    basis: FockBasis
    amplitudes: np.ndarray  # (D,) complex128
    t: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.basis.dim,):
            raise ValueError("amplitude vector does not match the basis")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def fock_initial(n_total: int, well: int = 2) -> QuantumState:
    """|0,...,N,...,0> with all atoms in one well."""
    basis = FockBasis.for_total(n_total)
    occ = [0, 0, 0]
    occ[well - 1] = n_total
    amp = np.zeros(basis.dim, dtype=np.complex128)
    amp[basis.index_of(*occ)] = 1.0
    return QuantumState(basis=basis, amplitudes=amp)


def build_hamiltonian(basis: FockBasis, j: float, chi: float) -> sparse.csr_matrix:
    """Sparse Hermitian H/hbar in the given sector (at most 5 nonzeros per row)."""
    n = basis.states
    d = basis.dim
    rows = [np.arange(d)]
    cols = [np.arange(d)]
    vals = [chi * np.sum(n * (n - 1), axis=1).astype(np.float64)]
    # hopping terms adag_a a_b for the chain pairs; H picks up -J sqrt((n_a+1) n_b)
    for a, b in ((0, 1), (1, 0), (2, 1), (1, 2)):
        src = np.nonzero(n[:, b] > 0)[0]
        amp = -j * np.sqrt((n[src, a] + 1.0) * n[src, b])
        target = n[src].copy()
        target[:, a] += 1
        target[:, b] -= 1
        rows.append(basis.indices(target))
        cols.append(src)
        vals.append(amp)
    h = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(d, d),
    ).tocsr()
    return h


@lru_cache(maxsize=64)
def _propagator_parts(n_total: int, j: float, chi: float):
    """Eigendecomposition (small sectors) or the sparse matrix (large ones)."""
    basis = FockBasis.for_total(n_total)
    h = build_hamiltonian(basis, j, chi)
    if basis.dim <= DENSE_EIG_MAX:
        energies, vectors = np.linalg.eigh(h.toarray())
        return ("dense", energies, vectors)
    return ("sparse", h, None)


def _advance(psi: np.ndarray, n_total: int, j: float, chi: float, delta: float) -> np.ndarray:
    if delta == 0.0:
        return psi
    kind, a, b = _propagator_parts(n_total, j, chi)
    if kind == "dense":
        out = b @ (np.exp(-1j * a * delta) * (b.T @ psi))
    else:
        out = expm_multiply(-1j * delta * a.astype(np.complex128), psi)
    drift = abs(np.linalg.norm(out) - 1.0)
    if drift > NORM_TOL:
        raise StepSizeError(f"norm drifted by {drift:.3e} over a segment of {delta:.3e}")
    return out


def _segment_bounds(j_schedule: Schedule, chi_schedule: Schedule,
                    t0: float, t1: float) -> list[tuple[float, float]]:
    cuts = {c.cutoff_time for c in (j_schedule, chi_schedule)
            if c.cutoff_time is not None and t0 < c.cutoff_time < t1}
    bounds = [t0, *sorted(cuts), t1]
    return list(zip(bounds[:-1], bounds[1:]))


def states_at_times(state: QuantumState, j_schedule: Schedule, chi_schedule: Schedule,
                    times: np.ndarray) -> list[QuantumState]:
    """Exact state snapshots at the requested (ascending) times >= state.t."""
    times = np.asarray(times, dtype=np.float64)
    if times.size and times[0] < state.t - 1e-12:
        raise ValueError("cannot propagate backwards")
    out: list[QuantumState] = []
    psi = state.amplitudes.copy()
    t_cur = state.t
    horizon = max(float(times[-1]), t_cur) if times.size else t_cur
    n_total = state.basis.n_total
    pending = list(times)
    for a, b in _segment_bounds(j_schedule, chi_schedule, t_cur, horizon):
        j = j_schedule.value(a)
        chi = chi_schedule.value(a)
        while pending and pending[0] <= b + 1e-15:
            target = pending.pop(0)
            psi = _advance(psi, n_total, j, chi, target - t_cur)
            t_cur = target
            out.append(QuantumState(basis=state.basis, amplitudes=psi.copy(), t=t_cur))
        if t_cur < b:
            psi = _advance(psi, n_total, j, chi, b - t_cur)
            t_cur = b
    return out


def evolve(state: QuantumState, j_schedule: Schedule, chi_schedule: Schedule,
           dt: float, t_final: float) -> list[QuantumState]:
    """Snapshots every dt from state.t to t_final (inclusive)."""
    n = round((t_final - state.t) / dt)
    times = state.t + np.arange(n + 1, dtype=np.float64) * dt
    return states_at_times(state, j_schedule, chi_schedule, times)


@lru_cache(maxsize=256)
def _hop_13(n_total: int):
    """Cached index map and amplitudes for <adag_1 a_3> in one sector."""
    basis = FockBasis.for_total(n_total)
    n = basis.states
    src = np.nonzero(n[:, 2] > 0)[0]
    target = n[src].copy()
    target[:, 0] += 1
    target[:, 2] -= 1
    amp = np.sqrt((n[src, 0] + 1.0) * n[src, 2])
    return src, basis.indices(target), amp


def moment_vector(state: QuantumState) -> np.ndarray:
    """The estimator's nine monomial expectations, exactly."""
    n = state.basis.states
    w = np.abs(state.amplitudes) ** 2
    m = np.empty(N_MONOMIALS, dtype=np.complex128)
    for jw in range(3):
        m[jw] = np.dot(w, n[:, jw])
        m[3 + jw] = np.dot(w, n[:, jw] * (n[:, jw] - 1))
    m[8] = np.dot(w, n[:, 0] * n[:, 2])
    # <adag_1 a_3>: hop one atom from well 3 to well 1
    src, idx, amp = _hop_13(state.basis.n_total)
    c13 = np.sum(np.conj(state.amplitudes[idx]) * amp * state.amplitudes[src]) if src.size else 0j
    m[6] = c13
    m[7] = np.conj(c13)
    return m


@dataclass
class OracleExpectations:
    """Exact moments and the derived statistics for one state."""

    moments: np.ndarray  # (N_MONOMIALS,) complex
    stats: np.ndarray  # STAT_NAMES order, real


def expectations(state: QuantumState) -> OracleExpectations:
    m = moment_vector(state)
    return OracleExpectations(moments=m, stats=stats_from_moments(m).real)


@dataclass
class CoherentOracleState:
    """Truncated Poissonian superposition over number sectors.

    Only number-conserving observables are evaluated, so sector weights are
    sufficient; weights are renormalized over the kept sectors and the
    discarded tail mass is reported.
    """

    sector_states: list[QuantumState]
    weights: np.ndarray
    truncation_error: float


def coherent_initial(n_mean: float, cutoff: int, well: int = 2) -> CoherentOracleState:
    if n_mean < 0:
        raise ValueError("mean occupation must be non-negative")
    if cutoff < n_mean + 8.0 * np.sqrt(n_mean):
        raise ValueError("cutoff too small for the requested coherent state")
    ns = np.arange(cutoff + 1)
    weights = poisson.pmf(ns, n_mean)
    tail = float(poisson.sf(cutoff, n_mean))
    if tail > 1e-8:
        raise ValueError(f"truncated weight {tail:.3e} exceeds 1e-8")
    weights = weights / weights.sum()
    sector_states = [fock_initial(int(n), well=well) for n in ns]
    return CoherentOracleState(sector_states=sector_states, weights=weights,
                               truncation_error=tail)


def oracle_moments_at_times(params: ModelParams, times: np.ndarray,
                            coherent_cutoff: int | None = None) -> np.ndarray:
    """(S, N_MONOMIALS) exact moment trajectory for the configured model."""
    times = np.asarray(times, dtype=np.float64)
    if params.initial_state_kind == "fock":
        state = fock_initial(params.n_atoms, well=params.initial_well)
        snaps = states_at_times(state, params.j_schedule, params.chi_schedule, times)
        return np.array([moment_vector(s) for s in snaps])
    if coherent_cutoff is None:
        coherent_cutoff = int(np.ceil(params.n_atoms + 8.0 * np.sqrt(params.n_atoms))) + 1
    mix = coherent_initial(params.n_atoms, coherent_cutoff, well=params.initial_well)
    total = np.zeros((times.size, N_MONOMIALS), dtype=np.complex128)
    for w, sector in zip(mix.weights, mix.sector_states):
        if w == 0.0:
            continue
        snaps = states_at_times(sector, params.j_schedule, params.chi_schedule, times)
        total += w * np.array([moment_vector(s) for s in snaps])
    return total


def oracle_stats_at_times(params: ModelParams, times: np.ndarray,
                          coherent_cutoff: int | None = None) -> np.ndarray:
    """(S, len(STAT_NAMES)) exact statistics on the sample grid."""
    return stats_from_moments(oracle_moments_at_times(params, times, coherent_cutoff)).real
