"""Channel utilization and MAC delay from a fixed-point solution.

Utilization weighs the payload airtime of successful slots against the
real-time cost of idle, success, and collision slot types; delay averages
the per-stage service time over the stage distribution conditional on
eventual success.  Real time enters through the mean embedded-step duration
``sigma_avg``, which charges boundary hits with the full out-of-period gap.
"""

from dataclasses import dataclass

from .config import derive_sector_models, derive_timings, window_sizes
from .errors import InfeasibleModelError
from .markov import solve_fixed_point

__all__ = [
    "SlotProbabilities", "PerformanceReport", "slot_probabilities",
    "sector_utilization", "aggregate_utilization", "sigma_avg",
    "expected_delay", "analyze",
]


@dataclass(frozen=True)
class SlotProbabilities:
    """Idle/success/collision split for all stations and for the others."""

    n_k: int
    p_idle: float
    p_suc: float
    p_col: float
    po_idle: float
    po_suc: float
    po_col: float


@dataclass(frozen=True)
class PerformanceReport:
    """Per-sector and aggregate utilization, delay, and drop statistics."""

    per_sector_u: tuple
    aggregate_u: float
    per_sector_delay: tuple
    per_sector_drop_prob: tuple
    diagnostics: tuple


def slot_probabilities(tau, n_k):
    """Split a contention slot by outcome for n_k saturated stations."""
    if not 0.0 < tau < 1.0:
        raise InfeasibleModelError(f"tau must be in (0, 1), got {tau}")
    if n_k < 1:
        raise InfeasibleModelError(f"n_k must be >= 1, got {n_k}")
    p_idle = (1.0 - tau) ** n_k
    p_suc = n_k * tau * (1.0 - tau) ** (n_k - 1)
    p_col = 1.0 - p_idle - p_suc
    if n_k == 1:
        po_idle, po_suc = 1.0, 0.0
    else:
        po_idle = (1.0 - tau) ** (n_k - 1)
        po_suc = (n_k - 1) * tau * (1.0 - tau) ** (n_k - 2)
    po_col = 1.0 - po_idle - po_suc
    return SlotProbabilities(
        n_k=n_k, p_idle=p_idle, p_suc=p_suc, p_col=p_col,
        po_idle=po_idle, po_suc=po_suc, po_col=po_col,
    )


def sector_utilization(sp, timings, slot_time):
    """Fraction of sector time carrying successful payload."""
    busy = (
        sp.p_idle * slot_time
        + sp.p_suc * timings.t_suc
        + sp.p_col * timings.t_col
    )
    return sp.p_suc * timings.e_payload / busy


def aggregate_utilization(per_sector):
    """Service-period-weighted mean of (u_k, cbap_k_slots) pairs."""
    total = sum(c for _, c in per_sector)
    if total <= 0:
        raise InfeasibleModelError("aggregate needs positive service periods")
    return sum(u * c for u, c in per_sector) / total


def sigma_avg(sp, timings, sector, params):
    """Mean real-time duration of one embedded chain step.

    With probability p_h the step hits the sector boundary and pays the
    whole out-of-period gap; otherwise it costs whichever slot type the
    other stations produce.
    """
    sigma = params.slot_time
    in_period = (
        sp.po_idle * sigma
        + sp.po_suc * timings.t_suc
        + sp.po_col * timings.t_col
    )
    gap = (params.bi_slots - sector.cbap_k_slots) * sigma
    return (1.0 - sector.p_h) * in_period + sector.p_h * gap


def expected_delay(sol, sp, timings, sector, params, w0, m,
                   window_rule="doubling"):
    """Mean MAC delay of packets that are eventually delivered.

    Stage i costs i collisions, one success, and the mean backoff drawn at
    stages 0..i, each counter tick lasting sigma_avg over the decrement
    probability.
    """
    advance = 1.0 - sol.p_b - sector.p_h
    if advance <= 0.0:
        raise InfeasibleModelError(
            f"saturation leaves no decrement probability: p_b={sol.p_b}, "
            f"p_h={sector.p_h}"
        )
    widths = window_sizes(w0, m, window_rule)
    sa = sigma_avg(sp, timings, sector, params)
    tick = sa / advance
    p = sol.p
    stage_mass = [p ** i for i in range(m + 1)]
    norm = sum(stage_mass)
    delay = 0.0
    backoff = 0.0
    for i, w in enumerate(widths):
        backoff += (w - 1.0) / 2.0 * tick
        d_i = i * timings.t_col + timings.t_suc + backoff
        delay += stage_mass[i] / norm * d_i
    return delay


def analyze(params):
    """Full analytical report for one parameter set."""
    timings = derive_timings(params)
    sectors = derive_sector_models(params, timings)
    us, delays, drops, sols = [], [], [], []
    for sector in sectors:
        sol = solve_fixed_point(
            sector, params.w0, params.m, window_rule=params.window_rule
        )
        sp = slot_probabilities(sol.tau, sector.n_k)
        us.append(sector_utilization(sp, timings, params.slot_time))
        delays.append(expected_delay(
            sol, sp, timings, sector, params, params.w0, params.m,
            params.window_rule,
        ))
        drops.append(sol.p ** (params.m + 1))
        sols.append(sol)
    aggregate = aggregate_utilization(
        list(zip(us, (s.cbap_k_slots for s in sectors)))
    )
    return PerformanceReport(
        per_sector_u=tuple(us),
        aggregate_u=aggregate,
        per_sector_delay=tuple(delays),
        per_sector_drop_prob=tuple(drops),
        diagnostics=tuple(sols),
    )
