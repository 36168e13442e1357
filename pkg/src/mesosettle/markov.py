"""Absorbing Markov chain algebra.

Chains are stored dense; absorption moments are obtained from linear
solves against (I - Q) rather than an explicit fundamental matrix, with
a banded fast path for birth-death (tridiagonal) transient blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

__all__ = [
    "AbsorbingChain",
    "CanonicalForm",
    "AbsorptionStats",
    "AbsorptionSeries",
    "ConfidenceNotReached",
    "build_canonical",
    "absorption_stats",
    "absorption_series",
    "transitions_for_confidence",
]

ROW_SUM_TOL = 1e-12
# row deficits below this are silently renormalized; larger ones rejected
ROW_FIX_TOL = 1e-9

DEFAULT_MAX_TRANSITIONS = 10**7


class ConfidenceNotReached(RuntimeError):
    """Raised when the iteration cap is hit before the target confidence.

    The partial series computed so far is attached as ``partial``.
    """

    def __init__(self, msg: str, partial: "AbsorptionSeries"):
        super().__init__(msg)
        self.partial = partial


@dataclass(frozen=True)
class AbsorbingChain:
    """A finite Markov chain with at least one absorbing state.

    Parameters
    ----------
    transitions : (n, n) row-stochastic matrix.
    absorbing : indices of absorbing states.
    labels : optional per-state annotation (clock position in tau units,
        memory tag for extended-state chains).
    """

    transitions: np.ndarray
    absorbing: frozenset[int]
    labels: tuple | None = None

    def __post_init__(self):
        p = np.asarray(self.transitions, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("transition matrix must be square")
        n = p.shape[0]
        absorbing = frozenset(int(i) for i in self.absorbing)
        if not absorbing:
            raise ValueError("chain has no absorbing state")
        if any(i < 0 or i >= n for i in absorbing):
            raise ValueError("absorbing index out of range")
        deficits = np.abs(p.sum(axis=1) - 1.0)
        if np.any(deficits > ROW_FIX_TOL):
            raise ValueError(
                f"row sums deviate from 1 by up to {deficits.max():.3e}"
            )
        if np.any(deficits > ROW_SUM_TOL):
            p = p / p.sum(axis=1, keepdims=True)
        if np.any(p < -ROW_SUM_TOL):
            raise ValueError("negative transition probability")
        for i in absorbing:
            row = np.zeros(n)
            row[i] = 1.0
            if not np.allclose(p[i], row, atol=ROW_SUM_TOL):
                raise ValueError(f"absorbing state {i} has outgoing mass")
            p[i] = row
        p.setflags(write=False)
        object.__setattr__(self, "transitions", p)
        object.__setattr__(self, "absorbing", absorbing)
        if not _absorbing_reachable(p, absorbing):
            raise ValueError("some transient state cannot reach absorption")

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def transient(self) -> np.ndarray:
        """Transient state indices in original order."""
        mask = np.ones(self.n_states, dtype=bool)
        mask[list(self.absorbing)] = False
        return np.flatnonzero(mask)


def _absorbing_reachable(p: np.ndarray, absorbing: frozenset[int]) -> bool:
    # reverse BFS from the absorbing set over the support graph
    n = p.shape[0]
    support = p > 0.0
    reached = np.zeros(n, dtype=bool)
    frontier = list(absorbing)
    reached[frontier] = True
    while frontier:
        nxt = np.flatnonzero(support[:, frontier].any(axis=1) & ~reached)
        reached[nxt] = True
        frontier = list(nxt)
    return bool(reached.all())


@dataclass(frozen=True)
class CanonicalForm:
    """Canonical block form [[Q, R], [0, I]] with index bookkeeping."""

    q: np.ndarray
    r: np.ndarray
    transient_order: np.ndarray
    absorbing_order: np.ndarray


def build_canonical(chain: AbsorbingChain) -> CanonicalForm:
    """Split the transition matrix into transient (Q) and exit (R) blocks."""
    t_idx = chain.transient
    a_idx = np.array(sorted(chain.absorbing), dtype=int)
    if t_idx.size == 0:
        raise ValueError("chain has no transient states")
    p = chain.transitions
    q = p[np.ix_(t_idx, t_idx)].copy()
    r = p[np.ix_(t_idx, a_idx)].copy()
    return CanonicalForm(q=q, r=r, transient_order=t_idx, absorbing_order=a_idx)


@dataclass(frozen=True)
class AbsorptionStats:
    """Per-transient-state absorption-time moments, in transitions."""

    mean: np.ndarray
    variance: np.ndarray
    transient_order: np.ndarray
    std: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "std", np.sqrt(self.variance))

    def mean_at(self, state: int) -> float:
        return float(self.mean[_position_of(self.transient_order, state)])

    def std_at(self, state: int) -> float:
        return float(self.std[_position_of(self.transient_order, state)])

    def variance_at(self, state: int) -> float:
        return float(self.variance[_position_of(self.transient_order, state)])


def _position_of(order: np.ndarray, state: int) -> int:
    pos = np.flatnonzero(order == state)
    if pos.size == 0:
        raise KeyError(f"state {state} is not transient")
    return int(pos[0])


def _is_tridiagonal(q: np.ndarray) -> bool:
    if q.shape[0] < 3:
        return True
    mask = q != 0.0
    i, j = np.nonzero(mask)
    return bool(np.all(np.abs(i - j) <= 1))


def _solve_iq(q: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (I - Q) x = rhs, banded when Q is tridiagonal."""
    n = q.shape[0]
    iq = np.eye(n) - q
    if _is_tridiagonal(q):
        ab = np.zeros((3, n))
        ab[0, 1:] = np.diagonal(iq, 1)
        ab[1] = np.diagonal(iq)
        ab[2, :-1] = np.diagonal(iq, -1)
        return solve_banded((1, 1), ab, rhs)
    return np.linalg.solve(iq, rhs)


def absorption_stats(chain: AbsorbingChain) -> AbsorptionStats:
    """Mean and variance of the number of transitions to absorption.

    mean solves (I - Q) mean = 1.  The variance identity
    (2N - I) mean - mean^2 is evaluated with a second solve
    (I - Q) y = mean, giving N mean without forming N.
    """
    canon = build_canonical(chain)
    ones = np.ones(canon.q.shape[0])
    try:
        mean = _solve_iq(canon.q, ones)
        y = _solve_iq(canon.q, mean)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded
        raise ValueError("(I - Q) is singular") from exc
    variance = 2.0 * y - mean - mean**2
    # clip parasitic negatives from cancellation on nearly-instant states
    variance = np.where(variance < 0.0, 0.0, variance)
    return AbsorptionStats(
        mean=mean, variance=variance, transient_order=canon.transient_order
    )


@dataclass(frozen=True)
class AbsorptionSeries:
    """cdf[n] = P(absorbed after at most n transitions); pmf its difference."""

    cdf: np.ndarray
    pmf: np.ndarray
    initial_distribution: np.ndarray

    @property
    def n_transitions(self) -> int:
        return len(self.cdf) - 1


def absorption_series(
    chain: AbsorbingChain,
    initial: np.ndarray,
    *,
    target_confidence: float | None = None,
    max_n: int = DEFAULT_MAX_TRANSITIONS,
) -> AbsorptionSeries:
    """Absorption-probability time series by repeated vector-matrix products.

    The state distribution is propagated one transition at a time
    (never forming a matrix power); cdf[n] is the mass on absorbing
    states after n transitions.  Stops once cdf reaches
    ``target_confidence``, else at ``max_n``.
    """
    p0 = np.asarray(initial, dtype=float)
    if p0.shape != (chain.n_states,):
        raise ValueError("initial distribution has wrong length")
    if np.any(p0 < -ROW_SUM_TOL) or abs(p0.sum() - 1.0) > 1e-9:
        raise ValueError("initial distribution must be nonnegative and sum to 1")
    if target_confidence is not None and not 0.0 < target_confidence < 1.0:
        raise ValueError("target confidence must lie strictly in (0, 1)")

    a_idx = np.array(sorted(chain.absorbing), dtype=int)
    p = p0.copy()
    cdf = [float(p[a_idx].sum())]
    while not (target_confidence is not None and cdf[-1] >= target_confidence):
        if len(cdf) - 1 >= max_n:
            partial = _series_from_cdf(cdf, p0)
            if target_confidence is None:
                return partial
            raise ConfidenceNotReached(
                f"confidence {target_confidence} not reached within "
                f"{max_n} transitions (cdf = {cdf[-1]:.6g})",
                partial,
            )
        p = p @ chain.transitions
        cdf.append(float(p[a_idx].sum()))
    return _series_from_cdf(cdf, p0)


def _series_from_cdf(cdf: list[float], p0: np.ndarray) -> AbsorptionSeries:
    arr = np.asarray(cdf)
    pmf = np.diff(arr, prepend=0.0)
    pmf = np.where(pmf < 0.0, 0.0, pmf)  # guard 1e-17 rounding
    return AbsorptionSeries(cdf=arr, pmf=pmf, initial_distribution=p0)


def transitions_for_confidence(
    chain: AbsorbingChain,
    initial: np.ndarray,
    confidence: float,
    *,
    max_n: int = DEFAULT_MAX_TRANSITIONS,
) -> int:
    """Smallest n with cdf[n] >= confidence."""
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie strictly in (0, 1)")
    series = absorption_series(
        chain, initial, target_confidence=confidence, max_n=max_n
    )
    return int(np.argmax(series.cdf >= confidence))


def point_mass(chain: AbsorbingChain, state: int) -> np.ndarray:
    """Initial distribution concentrated on one state."""
    p0 = np.zeros(chain.n_states)
    p0[state] = 1.0
    return p0
