"""Likelihood of gappy observations, matrix powers, and brute-force oracles.

Conditioned on the first observed state, the probability of an observed
dataset factorizes over gaps: a gap from state a to state b with g hidden
slots contributes [P^(g+1)]_{a,b}, the (g+1)-step transition probability.
The brute-force functions recompute the same quantities by summing over
every completion of the hidden slots; they exist as independent oracles for
tests and are deliberately naive.
"""

from __future__ import annotations

import math

import numpy as np

from chan_em.errors import (
    BoundaryParameterError,
    EnumerationLimitError,
    ZeroProbabilityError,
)
from chan_em.expfam import SufficientStats
from chan_em.markov import IDLE, OCCUPIED, ChannelParams, transition_matrix
from chan_em.observation import ObservedDataset

SE_FLOOR_DB = -320.0

MAX_ENUMERATION_HIDDEN = 20

_INCREMENTAL_POWER_LIMIT = 1024

_ENUM_CHUNK = 1 << 16


def _renormalized(matrix: np.ndarray) -> np.ndarray:
    # guard against drift in long products: rows must stay stochastic
    out = matrix / matrix.sum(axis=1, keepdims=True)
    return np.minimum(out, 1.0)


def transition_powers(params: ChannelParams, max_power: int) -> np.ndarray:
    """Stack [P^0, P^1, ..., P^max_power] with per-step row renormalization."""
    if max_power < 0:
        raise ValueError("max_power must be >= 0")
    out = np.empty((max_power + 1, 2, 2))
    out[0] = np.eye(2)
    if max_power >= 1:
        step = transition_matrix(params)
        out[1] = step
        for n in range(2, max_power + 1):
            out[n] = _renormalized(out[n - 1] @ step)
    return out


def n_step_matrix(params: ChannelParams, n: int) -> np.ndarray:
    """n-step transition matrix P^n for n >= 1.

    Incremental products for small n, binary exponentiation (with the same
    renormalization guard) beyond, so n in the millions stays cheap.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n <= _INCREMENTAL_POWER_LIMIT:
        return transition_powers(params, n)[n]
    base = transition_matrix(params)
    result = np.eye(2)
    k = n
    while k:
        if k & 1:
            result = _renormalized(result @ base)
        k >>= 1
        if k:
            base = _renormalized(base @ base)
    return result


def incomplete_log_likelihood(dataset: ObservedDataset, params: ChannelParams) -> float:
    """Log-probability of the observed states given the first one.

    Sum over gaps of log [P^(g+1)]_{a,b}, grouped by gap signature. Requires
    interior parameters; raises ZeroProbabilityError if any observed gap has
    probability exactly zero (cannot happen at interior parameters, but the
    guard keeps the contract explicit).
    """
    if not params.is_interior():
        raise BoundaryParameterError(
            "incomplete_log_likelihood requires 0 < alpha, beta < 1"
        )
    signatures, counts = dataset.gap_histogram
    powers = transition_powers(params, int(signatures[:, 2].max()) + 1)
    total = 0.0
    for (a, b, g), count in zip(signatures, counts):
        prob = powers[g + 1, a, b]
        if prob <= 0.0:
            raise ZeroProbabilityError(
                f"gap {int(a)}->{int(b)} over {int(g) + 1} steps has zero probability"
            )
        total += count * math.log(prob)
    return float(total)


def geometric_mean_likelihood(dataset: ObservedDataset, params: ChannelParams) -> float:
    """Per-transition likelihood exp(loglik / num_transitions).

    Normalizing by the spanned transition count keeps the value on a
    comparable scale across dataset sizes, which is what the squared-error
    scores difference.
    """
    return math.exp(incomplete_log_likelihood(dataset, params) / dataset.num_transitions)


def _enumerate_paths(dataset: ObservedDataset) -> tuple[np.ndarray, int]:
    """Hidden slot indices (0-based) and their count, bounds-checked."""
    total_slots = int(dataset.times[-1])
    known = np.asarray(dataset.times) - 1
    hidden = np.setdiff1d(np.arange(total_slots), known)
    n_hidden = hidden.shape[0]
    if n_hidden > MAX_ENUMERATION_HIDDEN:
        raise EnumerationLimitError(
            f"{n_hidden} hidden slots exceed the enumeration bound "
            f"of {MAX_ENUMERATION_HIDDEN}"
        )
    return hidden, n_hidden


def _completion_block(
    dataset: ObservedDataset, hidden: np.ndarray, masks: np.ndarray
) -> np.ndarray:
    total_slots = int(dataset.times[-1])
    block = np.empty((masks.shape[0], total_slots), dtype=np.int8)
    block[:, np.asarray(dataset.times) - 1] = dataset.states
    if hidden.shape[0]:
        bits = (masks[:, None] >> np.arange(hidden.shape[0])) & 1
        block[:, hidden] = bits.astype(np.int8)
    return block


def brute_force_likelihood(dataset: ObservedDataset, params: ChannelParams) -> float:
    """Observation likelihood by explicit sum over all hidden completions.

    Exponential in the number of hidden slots (bounded at
    MAX_ENUMERATION_HIDDEN); an oracle for incomplete_log_likelihood, not a
    production path. Returns the plain (linear-scale) probability.
    """
    hidden, n_hidden = _enumerate_paths(dataset)
    P = transition_matrix(params)
    total = 0.0
    for lo in range(0, 1 << n_hidden, _ENUM_CHUNK):
        masks = np.arange(lo, min(lo + _ENUM_CHUNK, 1 << n_hidden))
        block = _completion_block(dataset, hidden, masks)
        total += float(P[block[:, :-1], block[:, 1:]].prod(axis=1).sum())
    return total


def brute_force_expected_stats(
    dataset: ObservedDataset, params: ChannelParams
) -> SufficientStats:
    """Posterior-expected transition counts by explicit enumeration.

    Weights each completion by its probability and averages the four
    complete-data counts; the E-step oracle.
    """
    hidden, n_hidden = _enumerate_paths(dataset)
    P = transition_matrix(params)
    weight_sum = 0.0
    acc = np.zeros(4)
    for lo in range(0, 1 << n_hidden, _ENUM_CHUNK):
        masks = np.arange(lo, min(lo + _ENUM_CHUNK, 1 << n_hidden))
        block = _completion_block(dataset, hidden, masks)
        prev = block[:, :-1]
        nxt = block[:, 1:]
        weights = P[prev, nxt].prod(axis=1)
        weight_sum += float(weights.sum())
        counts = np.stack(
            [
                ((prev == OCCUPIED) & (nxt == IDLE)).sum(axis=1),
                ((prev == IDLE) & (nxt == OCCUPIED)).sum(axis=1),
                (prev == OCCUPIED).sum(axis=1),
                (prev == IDLE).sum(axis=1),
            ]
        )
        acc += counts @ weights
    if weight_sum <= 0.0:
        raise ZeroProbabilityError("observations have zero probability, no posterior")
    expected = acc / weight_sum
    return SufficientStats(
        occ_to_idle=float(expected[0]),
        idle_to_occ=float(expected[1]),
        from_occ=float(expected[2]),
        from_idle=float(expected[3]),
    )


def se_db_between(value: float, reference: float) -> float:
    """Squared gap between two likelihood values on a decibel scale.

    10*log10((value - reference)^2), floored at SE_FLOOR_DB (exact
    coincidence would be -inf).
    """
    gap_sq = (value - reference) ** 2
    if gap_sq == 0.0:
        return SE_FLOOR_DB
    return max(10.0 * math.log10(gap_sq), SE_FLOOR_DB)


def squared_error_db(
    dataset: ObservedDataset,
    estimate: ChannelParams,
    reference: ChannelParams,
    mode: str = "normalized",
) -> float:
    """Likelihood-gap score of an estimate against reference parameters.

    mode "normalized" (default) compares per-transition likelihoods, which
    stays finite at any dataset size; mode "raw" compares the unnormalized
    observation probabilities and is only meaningful for small windows
    (it underflows to zero on long ones).
    """
    if mode == "normalized":
        value = geometric_mean_likelihood(dataset, estimate)
        ref = geometric_mean_likelihood(dataset, reference)
    elif mode == "raw":
        value = math.exp(incomplete_log_likelihood(dataset, estimate))
        ref = math.exp(incomplete_log_likelihood(dataset, reference))
    else:
        raise ValueError(f"mode must be 'normalized' or 'raw', got {mode!r}")
    return se_db_between(value, ref)
