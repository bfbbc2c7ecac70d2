"""Model parameters, frame timings, and per-sector channel constants.

A beacon interval of ``bi_slots`` idle slots is divided into sector service
periods; contention happens only inside a station's own period.  This module
turns raw configuration (populations, window sizes, frame sizes, PHY rates)
into the derived quantities the analytical model and the simulator share:
frame airtimes, slot-quantized frame durations, and per-sector transition
constants.
"""

import math
from dataclasses import dataclass, fields

from .errors import ConfigError, InfeasibleModelError

MICRO = 1e-6

# Default scenario: 60 GHz directional MAC with RTS/CTS protection,
# 27.5 Mb/s control rate and 2 Gb/s data rate.
DEFAULTS = {
    "n": 10,
    "q": 1,
    "w0": 7,
    "m": 5,
    "bi_slots": 20000,
    "cbap_slots": 8000,
    "slot_time": 5 * MICRO,
    "sifs": 2.5 * MICRO,
    "difs": 13.5 * MICRO,
    "rifs": 9 * MICRO,
    "rts_bytes": 20,
    "cts_bytes": 26,
    "ack_bytes": 14,
    "msdu_bytes": 7995,
    "control_rate": 27.5e6,
    "data_rate": 2e9,
    "phy_overhead": 0.0,
    "window_rule": "doubling",
    "cbap_split_rule": "equal",
    "strict_timing": True,
}

WINDOW_RULES = ("doubling", "doubling-minus-one")
SPLIT_RULES = ("equal", "proportional")


@dataclass(frozen=True)
class ModelParams:
    """Validated scenario description shared by model and simulator."""

    n: int = 10
    q: int = 1
    sector_populations: tuple = ()
    w0: int = 7
    m: int = 5
    bi_slots: int = 20000
    cbap_slots: int = 8000
    cbap_split: tuple = ()
    slot_time: float = 5 * MICRO
    sifs: float = 2.5 * MICRO
    difs: float = 13.5 * MICRO
    rifs: float = 9 * MICRO
    rts_bytes: int = 20
    cts_bytes: int = 26
    ack_bytes: int = 14
    msdu_bytes: int = 7995
    control_rate: float = 27.5e6
    data_rate: float = 2e9
    phy_overhead: float = 0.0
    window_rule: str = "doubling"
    cbap_split_rule: str = "equal"
    strict_timing: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        if self.w0 < 2:
            raise ConfigError(f"w0 must be >= 2, got {self.w0}")
        if self.m < 0:
            raise ConfigError(f"m must be >= 0, got {self.m}")
        if self.bi_slots < 1:
            raise ConfigError(f"bi_slots must be >= 1, got {self.bi_slots}")
        if not 1 <= self.cbap_slots <= self.bi_slots:
            raise ConfigError(
                f"cbap_slots must be in [1, bi_slots], got {self.cbap_slots}"
            )
        if self.window_rule not in WINDOW_RULES:
            raise ConfigError(f"unknown window_rule {self.window_rule!r}")
        if self.cbap_split_rule not in SPLIT_RULES:
            raise ConfigError(f"unknown cbap_split_rule {self.cbap_split_rule!r}")
        for name in ("slot_time", "sifs", "difs", "rifs",
                     "control_rate", "data_rate"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.phy_overhead < 0:
            raise ConfigError("phy_overhead must be >= 0")
        for name in ("rts_bytes", "cts_bytes", "ack_bytes", "msdu_bytes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

        pops = self.sector_populations or _round_robin(self.n, self.q)
        object.__setattr__(self, "sector_populations", tuple(pops))
        if len(self.sector_populations) != self.q:
            raise ConfigError(
                f"sector_populations has {len(self.sector_populations)} entries, "
                f"expected q={self.q}"
            )
        if any(nk < 1 for nk in self.sector_populations):
            raise ConfigError("every sector must hold at least one station")
        if sum(self.sector_populations) != self.n:
            raise ConfigError(
                f"sector_populations sums to {sum(self.sector_populations)}, "
                f"expected n={self.n}"
            )

        split = self.cbap_split or _split_cbap(
            self.cbap_slots, self.sector_populations, self.cbap_split_rule
        )
        object.__setattr__(self, "cbap_split", tuple(split))
        if len(self.cbap_split) != self.q:
            raise ConfigError(
                f"cbap_split has {len(self.cbap_split)} entries, expected q={self.q}"
            )
        if any(c < 1 for c in self.cbap_split):
            raise ConfigError("every sector service period must be >= 1 slot")
        if sum(self.cbap_split) != self.cbap_slots:
            raise ConfigError(
                f"cbap_split sums to {sum(self.cbap_split)}, "
                f"expected cbap_slots={self.cbap_slots}"
            )


def _round_robin(n, q):
    """Deal n stations one at a time over q sectors."""
    base, extra = divmod(n, q)
    return [base + 1 if k < extra else base for k in range(q)]


def _split_cbap(cbap_slots, populations, rule):
    """Divide the contention period into per-sector slot budgets."""
    q = len(populations)
    if rule == "equal":
        base, extra = divmod(cbap_slots, q)
        return [base + 1 if k < extra else base for k in range(q)]
    n = sum(populations)
    split = [cbap_slots * nk // n for nk in populations]
    short = cbap_slots - sum(split)
    for k in range(short):
        split[k] += 1
    return split


def make_params(**overrides):
    """Build ModelParams from DEFAULTS plus keyword overrides."""
    merged = dict(DEFAULTS)
    merged.update(overrides)
    known = {f.name for f in fields(ModelParams)}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigError(f"unknown parameter(s): {', '.join(unknown)}")
    return ModelParams(**merged)


def window_sizes(w0, m, rule="doubling"):
    """Contention window width per backoff stage 0..m."""
    if rule == "doubling":
        sizes = tuple((2 ** i) * w0 for i in range(m + 1))
    elif rule == "doubling-minus-one":
        sizes = tuple((2 ** i) * w0 - 1 for i in range(m + 1))
    else:
        raise ConfigError(f"unknown window_rule {rule!r}")
    if any(w < 1 for w in sizes):
        raise ConfigError(f"window rule {rule!r} yields an empty window")
    return sizes


def frame_airtime(num_bytes, rate, phy_overhead=0.0):
    """Seconds to serialize a frame: PHY preamble plus payload bits."""
    if num_bytes < 1:
        raise ConfigError(f"frame size must be >= 1 byte, got {num_bytes}")
    if rate <= 0:
        raise ConfigError(f"rate must be > 0, got {rate}")
    if phy_overhead < 0:
        raise ConfigError("phy_overhead must be >= 0")
    return phy_overhead + 8.0 * num_bytes / rate


@dataclass(frozen=True)
class TimingDurations:
    """Event durations derived from frame sizes and rates."""

    t_rts: float
    t_cts: float
    t_ack: float
    t_data: float
    t_suc: float
    t_col: float
    e_payload: float
    n_frame_slots: int


def derive_timings(params):
    """Compute success/collision exchange durations and slot counts.

    A successful exchange spends the RTS, two SIFS gaps, the CTS, a DIFS,
    the data frame, and the ACK; with ``strict_timing`` disabled an extra
    SIFS is inserted before the acknowledgment.  A collision costs the RTS
    plus SIFS, DIFS, and the RIFS recovery gap.
    """
    t_rts = frame_airtime(params.rts_bytes, params.control_rate, params.phy_overhead)
    t_cts = frame_airtime(params.cts_bytes, params.control_rate, params.phy_overhead)
    t_ack = frame_airtime(params.ack_bytes, params.control_rate, params.phy_overhead)
    t_data = frame_airtime(params.msdu_bytes, params.data_rate, params.phy_overhead)
    t_suc = t_rts + 2.0 * params.sifs + t_cts + params.difs + t_data + t_ack
    if not params.strict_timing:
        t_suc += params.sifs
    t_col = t_rts + params.sifs + params.difs + params.rifs
    if not t_suc > t_col > 0:
        raise ConfigError(
            f"timings must satisfy t_suc > t_col > 0, got {t_suc} and {t_col}"
        )
    n_frame_slots = math.ceil(t_suc / params.slot_time)
    return TimingDurations(
        t_rts=t_rts,
        t_cts=t_cts,
        t_ack=t_ack,
        t_data=t_data,
        t_suc=t_suc,
        t_col=t_col,
        e_payload=t_data,
        n_frame_slots=n_frame_slots,
    )


@dataclass(frozen=True)
class SectorModel:
    """Per-sector transition constants of the backoff chain."""

    n_k: int
    p_h: float
    p_h_prime: float
    p_r: float
    p_f: float
    cbap_k_slots: int


def derive_sector_models(params, timings):
    """Per-sector boundary/suspension constants.

    ``p_h`` is the chance a decrement slot is the last one that still fits a
    full exchange before the sector period ends; ``p_h_prime`` covers the
    deferral zone of the final ``n_frame_slots`` slots; ``p_r`` is the chance
    a suspended station's next slot falls inside its own period again.
    """
    nf = timings.n_frame_slots
    models = []
    for k, (nk, cbap_k) in enumerate(zip(params.sector_populations, params.cbap_split)):
        if cbap_k <= nf:
            raise InfeasibleModelError(
                f"sector {k}: service period of {cbap_k} slots cannot fit a "
                f"{nf}-slot frame exchange"
            )
        p_h = 1.0 / cbap_k
        p_h_prime = nf * p_h
        p_r = cbap_k / params.bi_slots
        models.append(
            SectorModel(
                n_k=nk,
                p_h=p_h,
                p_h_prime=p_h_prime,
                p_r=p_r,
                p_f=1.0 - p_r,
                cbap_k_slots=cbap_k,
            )
        )
    return models


_BOOL_STRINGS = {"true": True, "false": False, "yes": True, "no": False,
                 "1": True, "0": False}

_INT_FIELDS = {"n", "q", "w0", "m", "bi_slots", "cbap_slots",
               "rts_bytes", "cts_bytes", "ack_bytes", "msdu_bytes"}
_FLOAT_FIELDS = {"slot_time", "sifs", "difs", "rifs",
                 "control_rate", "data_rate", "phy_overhead"}
_STR_FIELDS = {"window_rule", "cbap_split_rule"}
_BOOL_FIELDS = {"strict_timing"}
_TUPLE_FIELDS = {"sector_populations", "cbap_split"}


def _parse_value(key, raw):
    raw = raw.strip()
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
        if key in _TUPLE_FIELDS:
            return tuple(int(part) for part in raw.split(",") if part.strip())
        if key in _BOOL_FIELDS:
            try:
                return _BOOL_STRINGS[raw.lower()]
            except KeyError:
                raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse value {raw!r}")


def parse_config_file(path):
    """Read a flat key=value file into an override dict.

    Blank lines and ``#`` comments are ignored; unknown keys are a hard
    error so that typos cannot silently fall back to defaults.
    """
    known = {f.name for f in fields(ModelParams)}
    overrides = {}
    unknown = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {text!r}")
            key, raw = text.split("=", 1)
            key = key.strip()
            if key not in known:
                unknown.append(key)
                continue
            overrides[key] = _parse_value(key, raw)
    if unknown:
        raise ConfigError(f"{path}: unknown config key(s): {', '.join(sorted(unknown))}")
    return overrides
