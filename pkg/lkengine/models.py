# lkengine/models.py
"""Run configuration and the fixed-format writers every command shares."""
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from lkengine.errors import InputError
from lkengine.geometry import zoo
from lkengine.geometry.metricfield import load_chart
from lkengine.geometry.submersion import load_submersion
from lkengine.geometry.tubeoracle import load_embedding
from lkengine.geometry.tensorcore import CONVENTION

OUTPUT_FORMATS = ("csv", "json")
SWEEP_HEADER = ("eps", "value", "target", "abs_err")
SECTIONAL_HEADER = ("eps", "class", "min_k")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run's output, echoed into its metadata"""
    command: str
    input: str
    indices: tuple = ()
    eps: tuple = ()
    max_nodes: int = 2 ** 21
    base_order: int = 12
    abs_tol: float = 1e-8
    rel_tol: float = 1e-7
    output_format: str = "csv"
    seed: int = 0
    samples: int = 0
    workers: int = 1
    out: Optional[str] = None

    def validate(self):
        if self.output_format not in OUTPUT_FORMATS:
            raise InputError(f"unknown output format '{self.output_format}'")
        if self.workers < 1:
            raise InputError(f"worker count must be at least 1, got {self.workers}")
        if self.seed < 0:
            raise InputError(f"seed must be non-negative, got {self.seed}")
        if self.samples < 0:
            raise InputError(f"sample count must be non-negative, got {self.samples}")
        if self.max_nodes < 1 or self.base_order < 1:
            raise InputError("quadrature caps must be positive")
        if any(not e > 0.0 for e in self.eps):
            raise InputError("eps values must be positive")
        return self

    def to_dict(self) -> dict:
        """Everything that determines the result; the worker count does not"""
        data = asdict(self)
        del data["workers"]
        data["indices"] = list(self.indices)
        data["eps"] = [fixed(e) for e in self.eps]
        return data


def parse_eps(text: str) -> tuple:
    """Comma list ``0.25,0.125`` or geometric spec ``a:ratio:count``"""
    text = (text or "").strip()
    if not text:
        return ()
    try:
        if ":" in text:
            start, ratio, count = text.split(":")
            start, ratio, count = float(start), float(ratio), int(count)
            if count < 1 or not 0.0 < ratio:
                raise ValueError("count must be positive and ratio must be positive")
            return tuple(start * ratio ** k for k in range(count))
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise InputError(f"invalid eps specification '{text}': {exc}") from None


def fixed(value):
    """Round a float to 9 significant digits; None and non-finite pass through"""
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        return value
    return float(f"{value:.9g}")


def format_float(value) -> str:
    if value is None:
        return ""
    return f"{float(value):.9g}"


def _rounded(obj):
    if isinstance(obj, float):
        return fixed(obj)
    if isinstance(obj, dict):
        return {key: _rounded(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(value) for value in obj]
    return obj


def render_json(run: RunConfig, result: dict) -> str:
    """Metadata block plus result, sorted keys, floats at 9 significant digits"""
    document = {
        "config": run.to_dict(),
        "convention": CONVENTION,
        "result": _rounded(result),
    }
    return json.dumps(document, indent=2, sort_keys=True, allow_nan=True) + "\n"


def render_csv(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) or v is None else v for v in row])
    return buffer.getvalue()


def write_output(path: Optional[str], text: str):
    """Write to ``path``, or return the text for stdout when no path is given"""
    if path is None:
        return text
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    return None


def companion_path(path: Optional[str], suffix: str) -> Optional[str]:
    """``run.csv`` -> ``run.summary.json``"""
    if path is None:
        return None
    target = Path(path)
    return str(target.with_name(f"{target.stem}.{suffix}"))


@dataclass
class LoadedInput:
    """A resolved input: a zoo entry, or a JSON chart/atlas/submersion/embedding file"""
    name: str
    atlas: tuple = ()
    submersion: object = None
    embedding: object = None
    references: dict = field(default_factory=dict)


def load_input(uri: str) -> LoadedInput:
    if uri.startswith("zoo:"):
        entry = zoo.resolve(uri)
        return LoadedInput(entry.name, entry.atlas, entry.submersion, entry.embedding, entry.references)
    path = Path(uri)
    if not path.is_file():
        raise InputError(f"input file not found: {uri}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {uri}: {exc}") from None
    if not isinstance(data, dict):
        raise InputError(f"{uri} must hold a JSON object")
    name = str(data.get("name", path.stem))
    if "total_chart" in data:
        sc = load_submersion(data)
        return LoadedInput(name, (sc.total,), submersion=sc)
    if "coordinates" in data:
        emb = load_embedding(data)
        return LoadedInput(name, (emb.chart,), embedding=emb)
    if "charts" in data:
        return LoadedInput(name, tuple(load_chart(chart) for chart in data["charts"]))
    return LoadedInput(name, (load_chart(data),))
