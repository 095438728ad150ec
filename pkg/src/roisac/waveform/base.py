"""The Waveform container and its CSV/JSON debug serialization."""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


class WaveformError(ValueError):
    """Invalid waveform, configuration, or framing."""


class FramingError(WaveformError):
    """Bit count or sample count does not match the frame layout."""


@dataclass
class Waveform:
    """Real-valued sample sequence in normalized drive units.

    Attributes:
        samples: 1-D float array.
        sample_rate: Hz.
        dc_bias: DC offset added before driving the emitter.
        meta: class tag (``meta["class"]``) and generation parameters.
    """

    samples: np.ndarray
    sample_rate: float = 1.0
    dc_bias: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.samples)):
            raise WaveformError("waveform samples must be finite")
        if not self.sample_rate > 0:
            raise WaveformError("sample_rate must be positive")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def kind(self) -> str:
        return self.meta.get("class", "raw")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def power(self) -> float:
        return float(np.mean(self.samples**2)) if len(self.samples) else 0.0

    def is_emittable(self, tol: float = 1e-12) -> bool:
        """True when samples + dc_bias is nonnegative (intensity modulation)."""
        return bool(np.all(self.samples + self.dc_bias >= -tol))

    def with_bias(self, dc_bias: float | None = None) -> "Waveform":
        """Copy with a DC bias; default is the smallest bias making it emittable."""
        if dc_bias is None:
            dc_bias = max(0.0, -float(np.min(self.samples))) if len(self.samples) else 0.0
        return Waveform(self.samples.copy(), self.sample_rate, dc_bias, dict(self.meta))

    def header(self) -> dict:
        return {
            "sample_rate": self.sample_rate,
            "dc_bias": self.dc_bias,
            "class": self.kind,
            "n_samples": len(self.samples),
            "parameters": _jsonable({k: v for k, v in self.meta.items() if k != "class"}),
        }

    def save(self, stem: str | Path) -> tuple[Path, Path]:
        """Write ``<stem>.csv`` (sample_index, value) and ``<stem>.json`` header."""
        stem = Path(stem)
        csv_path = stem.with_suffix(".csv")
        json_path = stem.with_suffix(".json")
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_index", "value"])
            for i, v in enumerate(self.samples):
                w.writerow([i, repr(float(v))])
        json_path.write_text(json.dumps(self.header(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path

    @classmethod
    def load(cls, stem: str | Path) -> "Waveform":
        stem = Path(stem)
        hdr = json.loads(stem.with_suffix(".json").read_text())
        values = []
        with open(stem.with_suffix(".csv"), newline="") as fh:
            reader = csv.reader(fh)
            if next(reader, None) != ["sample_index", "value"]:
                raise WaveformError("unexpected waveform CSV header")
            for row in reader:
                values.append(float(row[1]))
        meta = dict(hdr.get("parameters", {}))
        meta["class"] = hdr.get("class", "raw")
        return cls(np.array(values), hdr["sample_rate"], hdr.get("dc_bias", 0.0), meta)


def _jsonable(obj: Any):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
