"""Brute-force validator for the closed-form chain solution.

Builds the full transition matrix over every (stage, counter, flag) state
from the same transition rules the closed form summarizes, solves for the
stationary distribution directly, and reports closed-form-vs-oracle errors
over a parameter grid.  Desk-scale only: never used in sweeps.
"""

from dataclasses import dataclass

import numpy as np

from .config import SectorModel, window_sizes
from .errors import AdmacError, OracleError, OracleSizeError
from .markov import SteadyStateVector, b000_closed_form, eta_terms, tau_of

MAX_STATES = 100_000
DENSE_LIMIT = 2000

# Grid for closed-form-vs-oracle validation: (w0, m, p, p_h, p_h_prime, p_f).
DEFAULT_GRID = tuple(sorted(set(
    (w0, m, p, p_h, p_h_mult * p_h, p_f)
    for w0 in (4, 8)
    for m in (1, 2, 3)
    for p in (0.1, 0.3, 0.5)
    for p_h in (0.0, 0.01)
    for p_h_mult in (1.0, 5.0)
    for p_f in (0.0, 0.6)
)))


@dataclass(frozen=True)
class ExplicitChain:
    """Dense one-step transition matrix with its state index."""

    index: dict
    matrix: np.ndarray
    n_states: int
    m: int
    widths: tuple


def raw_sector(p_h, p_h_prime, p_f, n_k=2):
    """SectorModel carrying bare probabilities for oracle grids."""
    return SectorModel(
        n_k=n_k, p_h=p_h, p_h_prime=p_h_prime,
        p_r=1.0 - p_f, p_f=p_f, cbap_k_slots=1,
    )


def build_chain(p, sector, w0, m, p_b=None, window_rule="doubling"):
    """Explicit transition matrix of the per-station backoff chain.

    States are (i, j, 0) for j in [0, w_i-1] plus suspended twins
    (i, j, -1) for j >= 1; a transmission occupies exactly one chain step.
    The busy probability ``p_b`` defaults to the collision probability p,
    the identity that holds at every fixed point.
    """
    widths = window_sizes(w0, m, window_rule)
    n_states = sum(2 * w - 1 for w in widths)
    if n_states > MAX_STATES:
        raise OracleSizeError(
            f"chain would need {n_states} states (limit {MAX_STATES}); "
            f"use the closed form for parameters this large"
        )
    index = {}
    for i, w in enumerate(widths):
        for j in range(w):
            index[(i, j, 0)] = len(index)
        for j in range(1, w):
            index[(i, j, -1)] = len(index)

    if p_b is None:
        p_b = p
    p_h, p_h_prime, p_f = sector.p_h, sector.p_h_prime, sector.p_f
    matrix = np.zeros((n_states, n_states))
    for i, w in enumerate(widths):
        for j in range(1, w):
            row = index[(i, j, 0)]
            column = p_h_prime if j == 1 else p_h
            matrix[row, index[(i, j, 0)]] += p_b
            matrix[row, index[(i, j, -1)]] += column
            matrix[row, index[(i, j - 1, 0)]] += 1.0 - p_b - column

            row = index[(i, j, -1)]
            matrix[row, index[(i, j, -1)]] += p_f
            matrix[row, index[(i, j, 0)]] += 1.0 - p_f

        row = index[(i, 0, 0)]
        w_next = widths[i + 1] if i < m else None
        for j0 in range(widths[0]):
            matrix[row, index[(0, j0, 0)]] += (1.0 - p) / widths[0]
        if i < m:
            for j1 in range(w_next):
                matrix[row, index[(i + 1, j1, 0)]] += p / w_next
        else:
            matrix[row, index[(0, 0, 0)]] += p

    sums = matrix.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > 1e-12:
        raise OracleError("transition matrix rows do not sum to 1")
    return ExplicitChain(
        index=index, matrix=matrix, n_states=n_states, m=m, widths=widths
    )


def stationary_distribution(chain, tol=1e-12, method="auto"):
    """Solve pi P = pi, sum(pi) = 1 for the explicit chain.

    Direct linear solve up to DENSE_LIMIT states, power iteration above
    (or on request via ``method``).
    """
    pmat = chain.matrix
    n = chain.n_states
    if method == "auto":
        method = "direct" if n <= DENSE_LIMIT else "power"

    if method == "direct":
        a = pmat.T - np.eye(n)
        a[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        try:
            pi = np.linalg.solve(a, b)
        except np.linalg.LinAlgError as exc:
            raise OracleError(f"stationary solve failed: {exc}") from exc
    elif method == "power":
        pi = np.full(n, 1.0 / n)
        for _ in range(500_000):
            nxt = pi @ pmat
            if np.max(np.abs(nxt - pi)) <= tol:
                pi = nxt
                break
            pi = nxt
        else:
            raise OracleError(
                f"power iteration did not reach {tol} in 500000 steps"
            )
    else:
        raise OracleError(f"unknown stationary method {method!r}")

    residual = np.max(np.abs(pi @ pmat - pi))
    if residual > max(tol, 1e-10):
        raise OracleError(f"stationary residual {residual} exceeds {tol}")
    if np.min(pi) < -1e-10:
        raise OracleError(f"stationary vector has negative mass {np.min(pi)}")
    entries = {state: float(pi[row]) for state, row in chain.index.items()}
    return SteadyStateVector(m=chain.m, widths=chain.widths, entries=entries)


def validation_report(grid=DEFAULT_GRID, window_rule="doubling"):
    """Closed form vs oracle on every grid point.

    Returns a list of dict rows with both b000 values, both tau values,
    and their relative errors.
    """
    rows = []
    for w0, m, p, p_h, p_h_prime, p_f in grid:
        point = f"(w0={w0}, m={m}, p={p}, p_h={p_h}, p_h'={p_h_prime}, p_f={p_f})"
        try:
            sector = raw_sector(p_h, p_h_prime, p_f)
            eta, eta_prime = eta_terms(p, p_f, p_h, p_h_prime)
            b_closed = b000_closed_form(p, w0, m, eta, eta_prime, window_rule)
            tau_closed = tau_of(p, b_closed, m)
            chain = build_chain(p, sector, w0, m, window_rule=window_rule)
            vec = stationary_distribution(chain)
        except AdmacError as exc:
            raise type(exc)(f"grid point {point}: {exc}") from exc
        b_oracle = vec.entries[(0, 0, 0)]
        tau_oracle = vec.head_mass()
        rows.append({
            "w0": w0, "m": m, "p": p,
            "p_h": p_h, "p_h_prime": p_h_prime, "p_f": p_f,
            "b000_closed": b_closed, "b000_oracle": b_oracle,
            "b000_rel_err": abs(b_closed - b_oracle) / b_oracle,
            "tau_closed": tau_closed, "tau_oracle": tau_oracle,
            "tau_rel_err": abs(tau_closed - tau_oracle) / tau_oracle,
        })
    return rows
