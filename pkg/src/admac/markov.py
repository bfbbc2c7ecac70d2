"""Fixed point and steady state of the per-station backoff chain.

Each station is modeled by a three-dimensional chain over (backoff stage i,
residual counter j, suspension flag h).  The counter decrements only on
slots the station observes idle inside its own sector period; busy slots
freeze it, and period boundaries park the station in a suspended copy of
the state until its sector is scheduled again.  The chain is summarized by
two geometric-holding factors (``eta`` for ordinary counter states,
``eta_prime`` for the deferral-prone j=1 states), a closed-form probability
``b000`` of the stage-0 transmit state, and the per-slot attempt rate
``tau``.  The attempt rate and the conditional collision probability are
coupled through a monotone fixed point solved by bisection.
"""

from dataclasses import dataclass

from .config import window_sizes
from .errors import InfeasibleModelError, InternalConsistencyError

TAU_EPS = 1e-12
PB_MARGIN = 1e-9


@dataclass(frozen=True)
class FixedPointSolution:
    """Converged attempt rate with its intermediate quantities."""

    tau: float
    p: float
    b000: float
    p_b: float
    eta: float
    eta_prime: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class SteadyStateVector:
    """Stationary probabilities keyed by (stage, counter, flag)."""

    m: int
    widths: tuple
    entries: dict

    def total(self):
        return sum(self.entries.values())

    def head_mass(self):
        """Probability of being in any transmit state (i, 0, 0)."""
        return sum(self.entries[(i, 0, 0)] for i in range(self.m + 1))


def eta_terms(p_b, p_f, p_h, p_h_prime):
    """Holding factors for counter states and their suspended twins.

    A counter state is held by busy slots (p_b) and boundary hits (p_h);
    each boundary hit also charges the geometric suspension dwell
    1 / (1 - p_f).  Requires p_b + p_h < 1 and p_b + p_h_prime < 1.
    """
    if not 0.0 <= p_b < 1.0:
        raise InfeasibleModelError(f"p_b must be in [0, 1), got {p_b}")
    if not 0.0 <= p_f < 1.0:
        raise InfeasibleModelError(f"p_f must be in [0, 1), got {p_f}")
    for name, val in (("p_h", p_h), ("p_h_prime", p_h_prime)):
        if not 0.0 <= val < 1.0:
            raise InfeasibleModelError(f"{name} must be in [0, 1), got {val}")
    if p_b + p_h >= 1.0 or p_b + p_h_prime >= 1.0:
        raise InfeasibleModelError(
            f"holding probabilities exceed 1: p_b={p_b}, p_h={p_h}, "
            f"p_h_prime={p_h_prime}"
        )
    eta = (1.0 + p_h / (1.0 - p_f)) / (1.0 - p_b - p_h)
    eta_prime = (1.0 + p_h_prime / (1.0 - p_f)) / (1.0 - p_b - p_h_prime)
    return eta, eta_prime


def b000_closed_form(p, w0, m, eta, eta_prime, window_rule="doubling"):
    """Stationary probability of the stage-0 transmit state.

    Normalizes the chain by summing, per stage i, the transmit state mass
    p**i and the counter-column masses weighted by eta / eta_prime.  The
    sum is evaluated stage by stage so it is exact at p = 1 and at the
    window-doubling singularity p = 1/2.
    """
    widths = window_sizes(w0, m, window_rule)
    head = 0.0
    columns = 0.0
    for i, w in enumerate(widths):
        pi = p ** i
        inflow = (1.0 - p ** (m + 1)) if i == 0 else pi
        head += pi
        columns += inflow * (w - 1.0) / w * (eta_prime + eta * (w - 2.0) / 2.0)
    bracket = head + columns
    if bracket < 1.0:
        raise InternalConsistencyError(
            f"normalization bracket {bracket} < 1; inputs p={p}, w0={w0}, m={m}"
        )
    return 1.0 / bracket


def tau_of(p, b000, m):
    """Per-slot attempt probability: total mass of the transmit states."""
    return b000 * sum(p ** i for i in range(m + 1))


def collision_probability(tau, n_k):
    """Chance at least one of the other n_k - 1 stations attempts."""
    return 1.0 - (1.0 - tau) ** (n_k - 1)


def _tau_residual(tau, sector, w0, m, window_rule):
    """G(tau) = tau_of(p(tau)) - tau along with its intermediates."""
    p = collision_probability(tau, sector.n_k)
    eta, eta_prime = eta_terms(p, sector.p_f, sector.p_h, sector.p_h_prime)
    b000 = b000_closed_form(p, w0, m, eta, eta_prime, window_rule)
    return tau_of(p, b000, m) - tau, p, b000, eta, eta_prime


def solve_fixed_point(sector, w0, m, tol=1e-10, max_iter=200,
                      window_rule="doubling"):
    """Bisect tau until the attempt rate reproduces itself.

    The upper bracket is capped so that the busy probability implied by tau
    keeps every holding denominator positive.  Raises InfeasibleModelError
    when no sign change exists in the bracket or bisection fails to reach
    ``tol`` within ``max_iter`` iterations.
    """
    if sector.n_k == 1:
        g, p, b000, eta, eta_prime = _tau_residual(0.0, sector, w0, m, window_rule)
        return FixedPointSolution(
            tau=g, p=p, b000=b000, p_b=p, eta=eta, eta_prime=eta_prime,
            iterations=0, residual=0.0,
        )

    lo = TAU_EPS
    hi = 1.0 - TAU_EPS
    pb_cap = 1.0 - max(sector.p_h, sector.p_h_prime) - PB_MARGIN
    if pb_cap <= 0.0:
        raise InfeasibleModelError(
            f"boundary probabilities leave no room for contention: "
            f"p_h_prime={sector.p_h_prime}"
        )
    hi = min(hi, 1.0 - (1.0 - pb_cap) ** (1.0 / (sector.n_k - 1)))

    g_lo, *_ = _tau_residual(lo, sector, w0, m, window_rule)
    g_hi, *_ = _tau_residual(hi, sector, w0, m, window_rule)
    if g_lo * g_hi > 0.0:
        raise InfeasibleModelError(
            f"no attempt-rate fixed point in ({lo}, {hi:.6g}): "
            f"G({lo})={g_lo:.3g}, G({hi:.6g})={g_hi:.3g}"
        )

    mid = 0.5 * (lo + hi)
    for iteration in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        g_mid, p, b000, eta, eta_prime = _tau_residual(
            mid, sector, w0, m, window_rule
        )
        if abs(g_mid) <= tol:
            return FixedPointSolution(
                tau=mid, p=p, b000=b000, p_b=p, eta=eta, eta_prime=eta_prime,
                iterations=iteration, residual=abs(g_mid),
            )
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
    raise InfeasibleModelError(
        f"fixed point did not converge below {tol} in {max_iter} iterations; "
        f"last bracket [{lo:.12g}, {hi:.12g}]"
    )


def steady_state_vector(sol, sector, w0, m, window_rule="doubling"):
    """Expand a fixed-point solution into per-state probabilities.

    Counter states carry the uniform-draw overhang (w - j) / w of their
    stage inflow, divided by the slot-advance probability that matches the
    column (ordinary vs deferral-prone); suspended twins carry the
    boundary-hit share of that mass spread over the geometric return time.
    """
    widths = window_sizes(w0, m, window_rule)
    p, b000 = sol.p, sol.b000
    entries = {}
    for i, w in enumerate(widths):
        inflow = (1.0 - p ** (m + 1)) * b000 if i == 0 else (p ** i) * b000
        entries[(i, 0, 0)] = (p ** i) * b000
        for j in range(1, w):
            column = sector.p_h_prime if j == 1 else sector.p_h
            advance = 1.0 - sol.p_b - column
            mass = inflow * (w - j) / w / advance
            entries[(i, j, 0)] = mass
            entries[(i, j, -1)] = mass * column / (1.0 - sector.p_f)
    vec = SteadyStateVector(m=m, widths=widths, entries=entries)
    total = vec.total()
    if abs(total - 1.0) > 1e-9:
        raise InternalConsistencyError(
            f"steady-state vector sums to {total}, expected 1"
        )
    return vec
