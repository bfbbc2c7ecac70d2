"""Shared fixtures: a lazily built bank of full-size simulation runs.

Full-size runs (10 seeds x 200 beacon intervals at the default timing) are
expensive, and several test modules plus the acceptance gate share the same
configurations, so the bank caches them per session and only simulates the
configurations a given test actually requests.
"""

import numpy as np
import pytest

from admac import derive_timings, empirical_report, make_params, run_simulation

SEEDS = tuple(range(10))
NUM_BI = 200
BANK_BI_SLOTS = 20000


def bank_params(w0=7, n=10, cbap_fraction=0.4, q=1):
    """Default-timing parameter set used by the bank configurations."""
    return make_params(
        n=n, q=q, w0=w0,
        bi_slots=BANK_BI_SLOTS,
        cbap_slots=round(cbap_fraction * BANK_BI_SLOTS),
    )


def mean_sim_u(runs, params):
    """Across-seed mean of the aggregate empirical utilization."""
    return float(np.mean([
        empirical_report(stats, params).aggregate_u for stats in runs
    ]))


def sim_delays_mean(stats):
    """All-packet mean delay of one run, None when nothing succeeded."""
    delays = np.concatenate(stats.delays)
    return float(delays.mean()) if delays.size else None


def tau_hat(stats, n_k, sector=0):
    """Attempts per station per embedded step in one sector."""
    steps = (stats.idle_slots[sector] + stats.successes[sector]
             + stats.collisions[sector])
    return stats.attempts[sector] / (n_k * steps)


class SimBank:
    """Cache of 10-seed, 200-BI runs keyed by (w0, n, cbap_fraction, q)."""

    def __init__(self):
        self._cache = {}

    def runs(self, w0=7, n=10, cbap_fraction=0.4, q=1):
        key = (w0, n, cbap_fraction, q)
        if key not in self._cache:
            params = bank_params(w0, n, cbap_fraction, q)
            timings = derive_timings(params)
            self._cache[key] = tuple(
                run_simulation(params, timings, seed, NUM_BI)
                for seed in SEEDS
            )
        return self._cache[key]

    def cached(self):
        return dict(self._cache)


@pytest.fixture(scope="session")
def sim_bank():
    return SimBank()
