"""Pipeline configuration and its INI-style key-value file format.

Every setting has a default; a config file only needs the keys it changes::

    [ingest]
    window_length = 200      ; samples per window
    sample_period = 1.0      ; seconds per sample
    window_seconds =         ; if set, overrides window_length via sample_period
    standardize = true
    label_column = label

    [discovery]
    max_lag = 2
    l1_intra = 0.1
    l1_lag = 0.1
    edge_threshold = 0.1
    max_outer_iterations = 100
    acyclicity_tolerance = 1e-8

    [trigger]
    similarity_threshold = 0.9
    bins = 20
    w_max = 2.0
    pseudo_count = 1.0

    [incremental]
    omega = 2.0
    stop_threshold = 0.1
    w_max = 2.0
    buffer_capacity =        ; empty means unbounded

    [classifier]
    learning_rate = 0.01
    epochs = 200
    hidden = 16
    dropout = 0.2
    seed = 0
    threshold = 0.5

    [pipeline]
    train_fraction = 0.4
    use_buffer = true
    use_cer = true
    use_lags = true
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

from .discovery import DiscoveryConfig
from .gcn import TrainConfig
from .incremental import IncrementalConfig

# lag order per dataset profile
LAG_PROFILES = {"swat": 4, "wadi": 3, "te": 4, "smd": 1}


@dataclass
class IngestConfig:
    window_length: int = 200
    sample_period: float = 1.0
    window_seconds: Optional[float] = None
    standardize: bool = True
    label_column: str = "label"

    def samples_per_window(self) -> int:
        if self.window_seconds is not None:
            return int(round(self.window_seconds / self.sample_period))
        return self.window_length


@dataclass
class TriggerConfig:
    similarity_threshold: float = 0.9
    bins: int = 20
    w_max: float = 2.0
    pseudo_count: float = 1.0


@dataclass
class PipelineConfig:
    ingest: IngestConfig = field(default_factory=IngestConfig)
    discovery: DiscoveryConfig = field(default_factory=DiscoveryConfig)
    max_lag: int = 2
    trigger: TriggerConfig = field(default_factory=TriggerConfig)
    incremental: IncrementalConfig = field(default_factory=IncrementalConfig)
    classifier: TrainConfig = field(default_factory=TrainConfig)
    classify_threshold: float = 0.5
    train_fraction: float = 0.4
    use_lags: bool = True

    def ablate(self, name: str) -> "PipelineConfig":
        """Copy with one component switched off: ``no_buffer``, ``no_cer`` or ``no_lags``."""
        if name == "full":
            return replace(self)
        if name == "no_buffer":
            return replace(self, incremental=replace(self.incremental, use_buffer=False))
        if name == "no_cer":
            return replace(self, incremental=replace(self.incremental, use_cer=False))
        if name == "no_lags":
            return replace(self, use_lags=False)
        raise ValueError(f"unknown ablation {name!r}")


ABLATIONS = ("full", "no_buffer", "no_cer", "no_lags")


def _coerce(value: str, current):
    value = value.strip()
    if isinstance(current, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if value == "":
        return None
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float) or current is None:
        try:
            num = float(value)
        except ValueError:
            return value
        # optional counts such as buffer_capacity default to None
        return int(num) if current is None and num.is_integer() and "." not in value else num
    return value


def _update(obj, section: configparser.SectionProxy):
    names = {f.name for f in fields(obj)}
    changes = {}
    for key, raw in section.items():
        if key not in names:
            raise KeyError(f"unknown key {key!r} in [{section.name}]")
        changes[key] = _coerce(raw, getattr(obj, key))
    return replace(obj, **changes)


def load_config(path: Union[str, Path, None] = None, text: Optional[str] = None) -> PipelineConfig:
    """Read a key-value config file; missing sections and keys keep defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if text is not None:
        parser.read_string(text)
    elif path is not None:
        with open(path) as fh:
            parser.read_file(fh)
    cfg = PipelineConfig()
    for name in parser.sections():
        sec = parser[name]
        if name == "ingest":
            cfg.ingest = _update(cfg.ingest, sec)
        elif name == "discovery":
            lag = sec.get("max_lag")
            if lag is not None:
                cfg.max_lag = LAG_PROFILES[lag.lower()] if lag.lower() in LAG_PROFILES else int(lag)
            rest = {k: v for k, v in sec.items() if k != "max_lag"}
            tmp = configparser.ConfigParser()
            tmp.read_dict({"discovery": rest})
            cfg.discovery = _update(cfg.discovery, tmp["discovery"])
        elif name == "trigger":
            cfg.trigger = _update(cfg.trigger, sec)
        elif name == "incremental":
            cfg.incremental = _update(cfg.incremental, sec)
        elif name == "classifier":
            sec = dict(sec.items())
            if "threshold" in sec:
                cfg.classify_threshold = float(sec.pop("threshold"))
            tmp = configparser.ConfigParser()
            tmp.read_dict({"classifier": sec})
            cfg.classifier = _update(cfg.classifier, tmp["classifier"])
        elif name == "pipeline":
            for key, raw in sec.items():
                if key == "train_fraction":
                    cfg.train_fraction = float(raw)
                elif key == "use_lags":
                    cfg.use_lags = _coerce(raw, True)
                elif key in ("use_buffer", "use_cer"):
                    cfg.incremental = replace(cfg.incremental, **{key: _coerce(raw, True)})
                else:
                    raise KeyError(f"unknown key {key!r} in [pipeline]")
        else:
            raise KeyError(f"unknown section [{name}]")
    return cfg
