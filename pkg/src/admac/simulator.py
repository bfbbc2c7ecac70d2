"""Slot-level simulator of saturated CSMA/CA inside sectored periods.

Time is a global integer slot clock.  Within a sector's service window,
every station whose counter is zero transmits; one transmitter is a success
consuming ceil(t_suc / slot) slots, two or more are a collision consuming
ceil(t_col / slot) slots, and an idle slot decrements every counter by one.
A transmission may start only when the remaining window still fits a full
exchange, so the final stretch of each window is provably transmission-free
and counters there sink to one (the deferral rule) while zeros wait for the
next window.  Outside its sector window a station is frozen.  The loop
advances in jumps between events, which is exact because decrements are
lockstep on idle slots.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .config import derive_sector_models, window_sizes
from .errors import ConfigError
from .metrics import PerformanceReport

_BUFFER = 512


class _Stream:
    """Buffered per-station uniform-draw stream on a Philox generator."""

    def __init__(self, seed, station_id):
        self.gen = np.random.Generator(
            np.random.Philox(key=(seed << 20) + station_id)
        )
        self.buf = self.gen.random(_BUFFER)
        self.pos = 0

    def draw(self, width):
        """Uniform integer in [0, width - 1]."""
        if self.pos == _BUFFER:
            self.buf = self.gen.random(_BUFFER)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return int(u * width)


@dataclass
class Station:
    """Mutable backoff state of one saturated station."""

    station_id: int
    sector: int
    stage: int
    counter: int
    retries: int
    enqueued_slot: int
    rng: _Stream = field(repr=False)


@dataclass(frozen=True)
class SectorSchedule:
    """Per-BI service windows: (start slot, length) per sector, in order."""

    windows: tuple
    bi_slots: int
    bi_index: int = 0

    def __post_init__(self):
        cursor = 0
        for start, length in self.windows:
            if start < cursor or length < 1:
                raise ConfigError("sector windows must be disjoint and ordered")
            cursor = start + length
        if cursor > self.bi_slots:
            raise ConfigError("sector windows exceed the beacon interval")


def schedule_from_params(params):
    """Consecutive sector windows at the start of each beacon interval."""
    windows = []
    start = 0
    for length in params.cbap_split:
        windows.append((start, length))
        start += length
    return SectorSchedule(windows=tuple(windows), bi_slots=params.bi_slots)


def make_stations(params, seed):
    """Stations with fresh stage-0 draws and independent RNG streams."""
    w0 = window_sizes(params.w0, params.m, params.window_rule)[0]
    stations = []
    sid = 0
    for sector, n_k in enumerate(params.sector_populations):
        for _ in range(n_k):
            rng = _Stream(seed, sid)
            stations.append(Station(
                station_id=sid, sector=sector, stage=0,
                counter=rng.draw(w0), retries=0, enqueued_slot=0, rng=rng,
            ))
            sid += 1
    return stations


@dataclass(frozen=True)
class SimStats:
    """Per-sector counters and success-conditioned delays of one run."""

    seed: int
    num_bi: int
    sector_cbap_slots: tuple
    successes: tuple
    collisions: tuple
    idle_slots: tuple
    dropped: tuple
    attempts: tuple
    busy_time: tuple
    payload_time: tuple
    delays: tuple


def run_simulation(params, timings, seed, num_bi=200):
    """Simulate ``num_bi`` beacon intervals; deterministic in ``seed``."""
    if num_bi < 1:
        raise ConfigError(f"num_bi must be >= 1, got {num_bi}")
    derive_sector_models(params, timings)  # validates window vs frame fit
    schedule = schedule_from_params(params)
    stations = make_stations(params, seed)
    widths = window_sizes(params.w0, params.m, params.window_rule)
    nf = timings.n_frame_slots
    nc = math.ceil(timings.t_col / params.slot_time)
    sigma = params.slot_time

    successes, collisions, idles = [], [], []
    drops_all, attempts_all, delay_arrays = [], [], []
    for sector, (start, length) in enumerate(schedule.windows):
        members = [st for st in stations if st.sector == sector]
        counters = np.array([st.counter for st in members], dtype=np.int64)
        stages = np.array([st.stage for st in members], dtype=np.int64)
        enqueued = np.array([st.enqueued_slot for st in members], dtype=np.int64)
        streams = [st.rng for st in members]
        m = params.m

        n_suc = n_col = n_idle = n_drop = n_att = 0
        delays = []
        for bi in range(num_bi):
            base = bi * schedule.bi_slots + start
            t = 0
            while t < length:
                remaining = length - t
                zeros = np.flatnonzero(counters == 0)
                if zeros.size and remaining >= nf:
                    if zeros.size == 1:
                        s = int(zeros[0])
                        t += nf
                        end = base + t
                        n_suc += 1
                        n_att += 1
                        delays.append(end - enqueued[s])
                        enqueued[s] = end
                        stages[s] = 0
                        counters[s] = streams[s].draw(widths[0])
                    else:
                        t += nc
                        end = base + t
                        n_col += 1
                        n_att += zeros.size
                        for s in zeros:
                            s = int(s)
                            if stages[s] == m:
                                n_drop += 1
                                stages[s] = 0
                                counters[s] = 0
                                enqueued[s] = end
                            else:
                                stages[s] += 1
                                counters[s] = streams[s].draw(widths[stages[s]])
                    continue
                if zeros.size == 0:
                    min_j = int(counters.min())
                    if t + min_j <= length - nf:
                        counters -= min_j
                        t += min_j
                        n_idle += min_j
                        continue
                # Transmission-free tail: counters sink to one and park.
                gap = length - t
                dec = np.clip(np.minimum(counters - 1, gap), 0, None)
                counters -= dec
                n_idle += gap
                t = length

        successes.append(n_suc)
        collisions.append(n_col)
        idles.append(n_idle)
        drops_all.append(n_drop)
        attempts_all.append(n_att)
        delay_arrays.append(np.asarray(delays, dtype=np.float64) * sigma)
        for k, st in enumerate(members):
            st.counter = int(counters[k])
            st.stage = int(stages[k])
            st.retries = int(stages[k])
            st.enqueued_slot = int(enqueued[k])

    return SimStats(
        seed=seed,
        num_bi=num_bi,
        sector_cbap_slots=tuple(params.cbap_split),
        successes=tuple(successes),
        collisions=tuple(collisions),
        idle_slots=tuple(idles),
        dropped=tuple(drops_all),
        attempts=tuple(attempts_all),
        busy_time=tuple(
            (s * nf + c * nc) * sigma
            for s, c in zip(successes, collisions)
        ),
        payload_time=tuple(s * timings.e_payload for s in successes),
        delays=tuple(delay_arrays),
    )


def empirical_report(stats, params):
    """Map run counters to utilization, delay, and drop statistics."""
    sigma = params.slot_time
    us, delays, drops = [], [], []
    for k, cbap_k in enumerate(stats.sector_cbap_slots):
        window_time = cbap_k * sigma * stats.num_bi
        us.append(stats.payload_time[k] / window_time)
        delays.append(
            float(np.mean(stats.delays[k])) if stats.delays[k].size else None
        )
        finished = stats.successes[k] + stats.dropped[k]
        drops.append(stats.dropped[k] / finished if finished else None)
    total = sum(stats.sector_cbap_slots)
    aggregate = sum(
        u * c for u, c in zip(us, stats.sector_cbap_slots)
    ) / total
    return PerformanceReport(
        per_sector_u=tuple(us),
        aggregate_u=aggregate,
        per_sector_delay=tuple(delays),
        per_sector_drop_prob=tuple(drops),
        diagnostics=(),
    )
