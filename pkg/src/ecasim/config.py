"""Simulation configuration: PHY constants, per-AC MAC parameters, scenario files.

All durations are integer microseconds so that runs are bit-reproducible
across platforms. Configurations are immutable after loading and safe to
share between parallel seeded runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import yaml

__all__ = [
    "AC",
    "Protocol",
    "TrafficProfile",
    "PhyConfig",
    "AcParams",
    "MacConfig",
    "EstimatorConfig",
    "ScenarioConfig",
    "ScenarioError",
    "default_phy_config",
    "default_mac_config",
    "default_ac_params",
    "default_sim_config",
    "factor_list_bits_per_symbol",
    "load_scenario",
    "parse_scenario",
    "serialize_scenario",
]

# Per-AC table order follows the CW_min vector [BK, BE, VI, VO] -> [32,32,16,8];
# a larger enum value means higher priority (used for virtual-collision wins).
class AC(enum.IntEnum):
    BK = 0
    BE = 1
    VI = 2
    VO = 3


class Protocol(str, enum.Enum):
    CSMA_CA = "csma-ca"
    ECA = "eca"
    ECA_DR = "eca-dr"


class TrafficProfile(str, enum.Enum):
    SATURATED = "saturated"
    UNSATURATED = "unsaturated"


CW_MIN_TABLE = (32, 32, 16, 8)  # indexed by AC
DELAY_SENSITIVE = (False, False, True, True)  # VI and VO
EMPTY_QUEUE_SENTINEL = 7  # 3-bit header field value meaning "queue empty after this tx"


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be parsed or violates an invariant."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ScenarioError(message)


@dataclass(frozen=True)
class PhyConfig:
    phy_rate_bps: int = 65_000_000
    channel_width_mhz: int = 20
    n_streams: int = 2
    slot_us: int = 9
    difs_us: int = 28
    sifs_us: int = 10
    t_phy_us: int = 32
    t_sym_us: int = 4
    # Data bits carried per OFDM symbol. 0 means "derive from the channel
    # rate": phy_rate * t_sym. See factor_list_bits_per_symbol() for the
    # alternative subcarrier-count derivation.
    bits_per_ofdm_symbol: int = 0

    def __post_init__(self) -> None:
        if self.bits_per_ofdm_symbol == 0:
            derived = self.phy_rate_bps * self.t_sym_us / 1_000_000
            object.__setattr__(self, "bits_per_ofdm_symbol", round(derived))
        for name in ("slot_us", "difs_us", "sifs_us", "t_phy_us", "t_sym_us"):
            _require(getattr(self, name) > 0, f"phy.{name} must be strictly positive")
        _require(self.difs_us > self.sifs_us, "phy.difs_us must exceed phy.sifs_us")
        _require(self.phy_rate_bps > 0, "phy.phy_rate_bps must be strictly positive")
        _require(self.bits_per_ofdm_symbol > 0, "phy.bits_per_ofdm_symbol must be strictly positive")


def factor_list_bits_per_symbol(
    subcarriers: int = 234,
    bits_per_subcarrier: int = 6,
    coding_num: int = 3,
    coding_den: int = 4,
    n_streams: int = 2,
) -> int:
    """Bits per OFDM symbol from the subcarrier/coding/MIMO factor list.

    With the defaults this yields 2106, which is inconsistent with a 65 Mbps
    channel rate; it is offered as an explicit override, never the default.
    """
    return subcarriers * bits_per_subcarrier * coding_num * n_streams // coding_den


@dataclass(frozen=True)
class AcParams:
    ac: AC
    cw_min: int
    delay_sensitive: bool

    def __post_init__(self) -> None:
        _require(self.cw_min >= 2 and self.cw_min & (self.cw_min - 1) == 0,
                 f"cw_min[{self.ac.name}] must be a power of two >= 2, got {self.cw_min}")
        _require(self.delay_sensitive == (self.ac in (AC.VO, AC.VI)),
                 f"delay_sensitive flag for {self.ac.name} must match AC class")


def default_ac_params() -> tuple[AcParams, ...]:
    return tuple(
        AcParams(ac=AC(i), cw_min=CW_MIN_TABLE[i], delay_sensitive=DELAY_SENSITIVE[i])
        for i in range(4)
    )


@dataclass(frozen=True)
class MacConfig:
    retry_limit: int = 6
    max_stage: int = 5
    queue_capacity: int = 2000
    payload_bytes: int = 1470
    protocol: Protocol = Protocol.ECA
    # Channel-activity accounting: one count per slot event, or weighted
    # by the event duration in empty-slot units.
    pcc_duration_weighted: bool = False

    def __post_init__(self) -> None:
        _require(self.retry_limit >= 1, "mac.retry_limit must be >= 1")
        # Value 7 of the 3-bit stage field is the empty-queue sentinel and
        # must never be a reachable stage.
        _require(0 <= self.max_stage <= 6,
                 f"mac.max_stage must be in [0, 6] (7 is the empty-queue sentinel), got {self.max_stage}")
        _require(self.queue_capacity >= 1, "mac.queue_capacity must be >= 1")
        _require(self.payload_bytes >= 0, "mac.payload_bytes must be >= 0")


@dataclass(frozen=True)
class EstimatorConfig:
    window_slots: int = 1000
    ema_alpha: float = 0.1
    update_every_slots: int = 100
    nac_cap_factor: float = 10.0
    pcc_cap: float = 0.999

    def __post_init__(self) -> None:
        _require(self.window_slots >= 10, "estimator.window_slots must be >= 10")
        _require(0.0 < self.ema_alpha <= 1.0, "estimator.ema_alpha must be in (0, 1]")
        _require(self.update_every_slots >= 1, "estimator.update_every_slots must be >= 1")
        _require(self.nac_cap_factor >= 1.0, "estimator.nac_cap_factor must be >= 1")
        _require(0.0 < self.pcc_cap < 1.0, "estimator.pcc_cap must be in (0, 1)")


# --- traffic source settings -------------------------------------------------

@dataclass(frozen=True)
class CbrSettings:
    kind: str = "cbr"
    rate_bps: int = 65_000_000
    payload_bytes: int = 1470
    poisson: bool = False

    def __post_init__(self) -> None:
        _require(self.rate_bps > 0, "cbr rate_bps must be > 0")
        _require(self.payload_bytes > 0, "cbr payload_bytes must be > 0")


@dataclass(frozen=True)
class VoiceSettings:
    kind: str = "voice-ilbc"
    payload_bytes: int = 38
    interval_us: int = 20_000
    talk_mean_us: int = 1_500_000
    silence_mean_us: int = 1_500_000
    always_on: bool = False

    def __post_init__(self) -> None:
        _require(self.payload_bytes > 0, "voice payload_bytes must be > 0")
        _require(self.interval_us > 0, "voice interval_us must be > 0")
        _require(self.talk_mean_us > 0 and self.silence_mean_us > 0,
                 "voice talk/silence means must be > 0")


@dataclass(frozen=True)
class VideoSettings:
    kind: str = "video-vbr"
    fps: int = 24
    mean_rate_bps: int = 2_000_000
    sigma: float = 0.5
    fragment_bytes: int = 1470
    max_frame_factor: float = 8.0

    def __post_init__(self) -> None:
        _require(self.fps > 0, "video fps must be > 0")
        _require(self.mean_rate_bps > 0, "video mean_rate_bps must be > 0")
        _require(self.sigma >= 0.0, "video sigma must be >= 0")
        _require(self.fragment_bytes > 0, "video fragment_bytes must be > 0")
        _require(self.max_frame_factor > 1.0, "video max_frame_factor must be > 1")


@dataclass(frozen=True)
class TraceSettings:
    kind: str = "video-trace"
    path: str = ""
    fps: int = 24
    fragment_bytes: int = 1470

    def __post_init__(self) -> None:
        _require(bool(self.path), "video-trace requires a path")
        _require(self.fps > 0, "video-trace fps must be > 0")
        _require(self.fragment_bytes > 0, "video-trace fragment_bytes must be > 0")


SourceSettings = CbrSettings | VoiceSettings | VideoSettings | TraceSettings


def _profile_traffic(profile: TrafficProfile, payload_bytes: int) -> tuple[SourceSettings | None, ...]:
    bulk_rate = 65_000_000 if profile is TrafficProfile.SATURATED else 1_000_000
    return (
        CbrSettings(rate_bps=bulk_rate, payload_bytes=payload_bytes),  # BK
        CbrSettings(rate_bps=bulk_rate, payload_bytes=payload_bytes),  # BE
        VideoSettings(),                                               # VI
        VoiceSettings(),                                               # VO
    )


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    profile: TrafficProfile = TrafficProfile.SATURATED
    duration_us: int = 60_000_000
    seeds: tuple[int, ...] = (1,)
    n_stations: int = 10
    sweep_stations: tuple[int, ...] = ()
    sweep_protocols: tuple[Protocol, ...] = (Protocol.ECA, Protocol.ECA_DR)
    phy: PhyConfig = field(default_factory=PhyConfig)
    mac: MacConfig = field(default_factory=MacConfig)
    ac_params: tuple[AcParams, ...] = field(default_factory=default_ac_params)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    # One source settings entry per AC in table order; None disables the AC.
    traffic: tuple[SourceSettings | None, ...] = ()

    def __post_init__(self) -> None:
        _require(self.n_stations >= 1, "scenario n_stations must be >= 1")
        _require(self.duration_us > 0, "scenario duration must be > 0")
        _require(len(self.seeds) > 0, "scenario seeds must be non-empty")
        _require(len(set(self.seeds)) == len(self.seeds), "scenario seeds must be distinct")
        _require(len(self.ac_params) == 4, "exactly four AC parameter entries required")
        if not self.sweep_stations:
            object.__setattr__(self, "sweep_stations", (self.n_stations,))
        _require(all(n >= 1 for n in self.sweep_stations), "sweep station counts must be >= 1")
        _require(len(self.sweep_protocols) > 0, "at least one protocol required")
        if not self.traffic:
            object.__setattr__(self, "traffic", _profile_traffic(self.profile, self.mac.payload_bytes))
        _require(len(self.traffic) == 4, "traffic must configure exactly four ACs")

    @property
    def duration_s(self) -> float:
        return self.duration_us / 1_000_000

    def for_run(self, protocol: Protocol, n_stations: int) -> "ScenarioConfig":
        """Derive the configuration of one (protocol, n_stations) run cell."""
        return replace(self, mac=replace(self.mac, protocol=protocol), n_stations=n_stations)


def default_phy_config() -> PhyConfig:
    return PhyConfig()


def default_mac_config() -> MacConfig:
    return MacConfig()


def default_sim_config() -> tuple[PhyConfig, MacConfig, tuple[AcParams, ...]]:
    """The simulation parameter table used throughout: 65 Mbps PHY over
    20 MHz with 2x2 MIMO, 9 us slots, DIFS 28 us, SIFS 10 us, 6 retries,
    1470 B payload, 2000-packet queues, stage cap 5."""
    return PhyConfig(), MacConfig(), default_ac_params()


# --- scenario file handling ---------------------------------------------------

_PHY_KEYS = {
    "rate_mbps", "rate_bps", "channel_width_mhz", "streams", "slot_us",
    "difs_us", "sifs_us", "phy_header_us", "symbol_us", "bits_per_symbol",
}
_MAC_KEYS = {
    "retry_limit", "max_stage", "queue_capacity", "payload_bytes", "cw_min",
    "pcc_counting",
}
_EST_KEYS = {"window_slots", "ema_alpha", "update_every_slots", "nac_cap_factor", "pcc_cap"}
_TOP_KEYS = {"name", "profile", "duration_s", "seeds", "stations", "sweep", "phy", "mac", "traffic", "estimator"}


def _check_keys(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    _require(not unknown, f"unknown key(s) {sorted(unknown)} in {where} block")


def _parse_phy(block: dict) -> PhyConfig:
    _check_keys(block, _PHY_KEYS, "phy")
    _require(not ("rate_mbps" in block and "rate_bps" in block),
             "phy: give rate_mbps or rate_bps, not both")
    rate = block.get("rate_bps", int(block.get("rate_mbps", 65) * 1_000_000))
    return PhyConfig(
        phy_rate_bps=int(rate),
        channel_width_mhz=int(block.get("channel_width_mhz", 20)),
        n_streams=int(block.get("streams", 2)),
        slot_us=int(block.get("slot_us", 9)),
        difs_us=int(block.get("difs_us", 28)),
        sifs_us=int(block.get("sifs_us", 10)),
        t_phy_us=int(block.get("phy_header_us", 32)),
        t_sym_us=int(block.get("symbol_us", 4)),
        bits_per_ofdm_symbol=int(block.get("bits_per_symbol", 0)),
    )


def _parse_mac(block: dict, protocol: Protocol) -> tuple[MacConfig, tuple[AcParams, ...]]:
    _check_keys(block, _MAC_KEYS, "mac")
    counting = block.get("pcc_counting", "event")
    _require(counting in ("event", "duration"),
             f"mac.pcc_counting must be 'event' or 'duration', got {counting!r}")
    mac = MacConfig(
        retry_limit=int(block.get("retry_limit", 6)),
        max_stage=int(block.get("max_stage", 5)),
        queue_capacity=int(block.get("queue_capacity", 2000)),
        payload_bytes=int(block.get("payload_bytes", 1470)),
        protocol=protocol,
        pcc_duration_weighted=(counting == "duration"),
    )
    cw_min = block.get("cw_min", list(CW_MIN_TABLE))
    _require(isinstance(cw_min, list) and len(cw_min) == 4,
             "mac.cw_min must be a four-entry list ordered [BK, BE, VI, VO]")
    acp = tuple(
        AcParams(ac=AC(i), cw_min=int(cw_min[i]), delay_sensitive=DELAY_SENSITIVE[i])
        for i in range(4)
    )
    return mac, acp


def _parse_source(ac_name: str, block: dict | str | None) -> SourceSettings | None:
    # YAML 1.1 reads a bare `off` as boolean False; accept both spellings.
    if block is None or block is False or block == "off" \
            or (isinstance(block, dict) and block.get("kind") == "off"):
        return None
    _require(isinstance(block, dict), f"traffic.{ac_name} must be a mapping or 'off'")
    kind = block.get("kind")
    _require(kind is not None, f"traffic.{ac_name} needs a 'kind'")
    try:
        if kind == "cbr":
            rate = block.get("rate_bps", int(block.get("rate_mbps", 1) * 1_000_000))
            return CbrSettings(rate_bps=int(rate),
                               payload_bytes=int(block.get("payload_bytes", 1470)),
                               poisson=bool(block.get("poisson", False)))
        if kind == "voice-ilbc":
            return VoiceSettings(
                payload_bytes=int(block.get("payload_bytes", 38)),
                interval_us=int(block.get("interval_ms", 20) * 1000),
                talk_mean_us=int(block.get("talk_s", 1.5) * 1_000_000),
                silence_mean_us=int(block.get("silence_s", 1.5) * 1_000_000),
                always_on=bool(block.get("always_on", False)),
            )
        if kind == "video-vbr":
            return VideoSettings(
                fps=int(block.get("fps", 24)),
                mean_rate_bps=int(block.get("mean_rate_bps", block.get("mean_rate_mbps", 2.0) * 1_000_000)),
                sigma=float(block.get("sigma", 0.5)),
                fragment_bytes=int(block.get("fragment_bytes", 1470)),
                max_frame_factor=float(block.get("max_frame_factor", 8.0)),
            )
        if kind == "video-trace":
            return TraceSettings(
                path=str(block.get("path", "")),
                fps=int(block.get("fps", 24)),
                fragment_bytes=int(block.get("fragment_bytes", 1470)),
            )
    except ScenarioError as exc:
        raise ScenarioError(f"traffic.{ac_name}: {exc}") from None
    raise ScenarioError(f"traffic.{ac_name}: unknown source kind {kind!r}")


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse and validate scenario YAML text (see README for the schema)."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ScenarioError(f"scenario parse error at {where}: {exc}") from None
    _require(isinstance(raw, dict), f"{source}: scenario file must be a mapping")
    _check_keys(raw, _TOP_KEYS, "top-level")

    profile_name = raw.get("profile", "saturated")
    try:
        profile = TrafficProfile(profile_name)
    except ValueError:
        raise ScenarioError(f"profile must be 'saturated' or 'unsaturated', got {profile_name!r}") from None

    sweep = raw.get("sweep", {})
    _check_keys(sweep, {"protocols", "stations"}, "sweep")
    proto_names = sweep.get("protocols", ["eca", "eca-dr"])
    try:
        protocols = tuple(Protocol(p) for p in proto_names)
    except ValueError as exc:
        raise ScenarioError(f"sweep.protocols: {exc}") from None

    phy = _parse_phy(raw.get("phy", {}))
    mac, ac_params = _parse_mac(raw.get("mac", {}), protocols[0] if protocols else Protocol.ECA)

    est_block = raw.get("estimator", {})
    _check_keys(est_block, _EST_KEYS, "estimator")
    estimator = EstimatorConfig(
        window_slots=int(est_block.get("window_slots", 1000)),
        ema_alpha=float(est_block.get("ema_alpha", 0.1)),
        update_every_slots=int(est_block.get("update_every_slots", 100)),
        nac_cap_factor=float(est_block.get("nac_cap_factor", 10.0)),
        pcc_cap=float(est_block.get("pcc_cap", 0.999)),
    )

    traffic_block = raw.get("traffic")
    if traffic_block is None:
        traffic: tuple[SourceSettings | None, ...] = ()
    else:
        _require(isinstance(traffic_block, dict), "traffic must be a mapping keyed by AC name")
        _check_keys(traffic_block, {"VO", "VI", "BE", "BK"}, "traffic")
        defaults = _profile_traffic(profile, mac.payload_bytes)
        traffic = tuple(
            _parse_source(AC(i).name, traffic_block[AC(i).name]) if AC(i).name in traffic_block else defaults[i]
            for i in range(4)
        )

    n_stations = int(raw.get("stations", 10))
    seeds_raw = raw.get("seeds", [1])
    _require(isinstance(seeds_raw, list), "seeds must be a list of integers")

    return ScenarioConfig(
        name=str(raw.get("name", "scenario")),
        profile=profile,
        duration_us=round(float(raw.get("duration_s", 60)) * 1_000_000),
        seeds=tuple(int(s) for s in seeds_raw),
        n_stations=n_stations,
        sweep_stations=tuple(int(n) for n in sweep.get("stations", [n_stations])),
        sweep_protocols=protocols,
        phy=phy,
        mac=mac,
        ac_params=ac_params,
        estimator=estimator,
        traffic=traffic,
    )


def load_scenario(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from None
    return parse_scenario(text, source=path)


def _source_to_dict(src: SourceSettings | None) -> dict | str:
    if src is None:
        return "off"
    if isinstance(src, CbrSettings):
        return {"kind": "cbr", "rate_bps": src.rate_bps, "payload_bytes": src.payload_bytes,
                "poisson": src.poisson}
    if isinstance(src, VoiceSettings):
        return {"kind": "voice-ilbc", "payload_bytes": src.payload_bytes,
                "interval_ms": src.interval_us // 1000,
                "talk_s": src.talk_mean_us / 1_000_000,
                "silence_s": src.silence_mean_us / 1_000_000,
                "always_on": src.always_on}
    if isinstance(src, VideoSettings):
        return {"kind": "video-vbr", "fps": src.fps, "mean_rate_bps": src.mean_rate_bps,
                "sigma": src.sigma, "fragment_bytes": src.fragment_bytes,
                "max_frame_factor": src.max_frame_factor}
    return {"kind": "video-trace", "path": src.path, "fps": src.fps,
            "fragment_bytes": src.fragment_bytes}


def serialize_scenario(cfg: ScenarioConfig) -> str:
    """Canonical YAML for a configuration; parse_scenario() round-trips it."""
    doc = {
        "name": cfg.name,
        "profile": cfg.profile.value,
        "duration_s": cfg.duration_us / 1_000_000,
        "seeds": list(cfg.seeds),
        "stations": cfg.n_stations,
        "sweep": {
            "protocols": [p.value for p in cfg.sweep_protocols],
            "stations": list(cfg.sweep_stations),
        },
        "phy": {
            "rate_bps": cfg.phy.phy_rate_bps,
            "channel_width_mhz": cfg.phy.channel_width_mhz,
            "streams": cfg.phy.n_streams,
            "slot_us": cfg.phy.slot_us,
            "difs_us": cfg.phy.difs_us,
            "sifs_us": cfg.phy.sifs_us,
            "phy_header_us": cfg.phy.t_phy_us,
            "symbol_us": cfg.phy.t_sym_us,
            "bits_per_symbol": cfg.phy.bits_per_ofdm_symbol,
        },
        "mac": {
            "retry_limit": cfg.mac.retry_limit,
            "max_stage": cfg.mac.max_stage,
            "queue_capacity": cfg.mac.queue_capacity,
            "payload_bytes": cfg.mac.payload_bytes,
            "cw_min": [p.cw_min for p in cfg.ac_params],
            "pcc_counting": "duration" if cfg.mac.pcc_duration_weighted else "event",
        },
        "estimator": {
            "window_slots": cfg.estimator.window_slots,
            "ema_alpha": cfg.estimator.ema_alpha,
            "update_every_slots": cfg.estimator.update_every_slots,
            "nac_cap_factor": cfg.estimator.nac_cap_factor,
            "pcc_cap": cfg.estimator.pcc_cap,
        },
        "traffic": {AC(i).name: _source_to_dict(cfg.traffic[i]) for i in range(4)},
    }
    return yaml.safe_dump(doc, sort_keys=False)
