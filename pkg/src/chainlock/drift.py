"""Artifact-tagged telemetry and windowed behavioral drift detection.

Every response record carries the identifiers of the checkpoint, prompt
template, retrieval index snapshot, and guardrail configuration that produced
it, plus decoding parameters. Detection slides a boundary through the stream
and compares the n records before it against the n after with a two-sample
statistic per metric; detected shifts are then attributed to the nearest
preceding entries of the artifact-change log.

Fixed-window two-sample tests are used deliberately: they are auditable and
an offline recomputation over the same two windows must reproduce every
statistic to within float noise.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Sequence

from chainlock import canonical
from chainlock.errors import InsufficientData, MissingTag, OutOfOrder
from chainlock.model import ArtifactId, format_timestamp, parse_timestamp

REQUIRED_TAGS = ("checkpoint", "guardrail_config", "index_snapshot", "prompt_template")

_MAX_STAT = sys.float_info.max  # stands in for an unbounded statistic


@dataclass(frozen=True)
class Decoding:
    temperature: float
    top_k: int

    def to_json_value(self) -> dict[str, Any]:
        return {"temperature": self.temperature, "top_k": self.top_k}

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "Decoding":
        return cls(temperature=value["temperature"], top_k=value["top_k"])


@dataclass(frozen=True)
class ResponseMetrics:
    refusal: bool
    token_length: int
    retrieval_hits: int
    feature: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.token_length < 0:
            raise ValueError("token_length must be >= 0")
        if self.retrieval_hits < 0:
            raise ValueError("retrieval_hits must be >= 0")
        if self.feature is not None:
            object.__setattr__(self, "feature", tuple(float(x) for x in self.feature))

    def to_json_value(self) -> dict[str, Any]:
        return {
            "refusal": self.refusal,
            "token_length": self.token_length,
            "retrieval_hits": self.retrieval_hits,
            "feature": list(self.feature) if self.feature is not None else None,
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "ResponseMetrics":
        feature = value.get("feature")
        return cls(
            refusal=value["refusal"],
            token_length=value["token_length"],
            retrieval_hits=value["retrieval_hits"],
            feature=tuple(feature) if feature is not None else None,
        )


@dataclass(frozen=True)
class ResponseRecord:
    seq: int
    at: datetime
    tags: Mapping[str, ArtifactId]
    decoding: Decoding
    metrics: ResponseMetrics

    def __post_init__(self) -> None:
        missing = [role for role in REQUIRED_TAGS if role not in self.tags]
        if missing:
            raise MissingTag(
                f"record seq {self.seq} is missing tag(s): {', '.join(missing)}"
            )

    def to_json_value(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "at": format_timestamp(self.at),
            "tags": {
                role: tag.to_json_value() for role, tag in sorted(self.tags.items())
            },
            "decoding": self.decoding.to_json_value(),
            "metrics": self.metrics.to_json_value(),
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "ResponseRecord":
        return cls(
            seq=value["seq"],
            at=parse_timestamp(value["at"]),
            tags={
                role: ArtifactId.from_json_value(tag)
                for role, tag in value["tags"].items()
            },
            decoding=Decoding.from_json_value(value["decoding"]),
            metrics=ResponseMetrics.from_json_value(value["metrics"]),
        )


class ResponseStream:
    """Single-writer record sequence; seq must be strictly increasing."""

    def __init__(self) -> None:
        self._records: list[ResponseRecord] = []

    def ingest(self, rec: ResponseRecord) -> None:
        if self._records and rec.seq <= self._records[-1].seq:
            raise OutOfOrder(
                f"seq {rec.seq} not after previous seq {self._records[-1].seq}"
            )
        self._records.append(rec)

    @property
    def records(self) -> tuple[ResponseRecord, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def save(self, path: str | Path) -> None:
        lines = (canonical.canonical_bytes(r.to_json_value()) for r in self._records)
        Path(path).write_bytes(b"".join(line + b"\n" for line in lines))

    @classmethod
    def load(cls, path: str | Path) -> "ResponseStream":
        stream = cls()
        for line in Path(path).read_bytes().split(b"\n"):
            if line:
                stream.ingest(ResponseRecord.from_json_value(canonical.parse(line)))
        return stream


@dataclass(frozen=True)
class ChangeEvent:
    at: datetime
    role: str
    from_id: ArtifactId
    to_id: ArtifactId

    def __post_init__(self) -> None:
        if self.from_id == self.to_id:
            raise ValueError("change event must change the artifact")

    def to_json_value(self) -> dict[str, Any]:
        return {
            "at": format_timestamp(self.at),
            "role": self.role,
            "from": self.from_id.to_json_value(),
            "to": self.to_id.to_json_value(),
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "ChangeEvent":
        return cls(
            at=parse_timestamp(value["at"]),
            role=value["role"],
            from_id=ArtifactId.from_json_value(value["from"]),
            to_id=ArtifactId.from_json_value(value["to"]),
        )


class ChangeLog:
    def __init__(self) -> None:
        self._events: list[ChangeEvent] = []

    def ingest_change(self, event: ChangeEvent) -> None:
        self._events.append(event)

    @property
    def events(self) -> tuple[ChangeEvent, ...]:
        return tuple(self._events)

    def save(self, path: str | Path) -> None:
        lines = (canonical.canonical_bytes(e.to_json_value()) for e in self._events)
        Path(path).write_bytes(b"".join(line + b"\n" for line in lines))

    @classmethod
    def load(cls, path: str | Path) -> "ChangeLog":
        log = cls()
        for line in Path(path).read_bytes().split(b"\n"):
            if line:
                log.ingest_change(ChangeEvent.from_json_value(canonical.parse(line)))
        return log


class DriftMetric(Enum):
    REFUSAL_RATE = "refusal_rate"
    MEAN_LENGTH = "mean_length"
    LENGTH_DISTRIBUTION = "length_distribution"
    RETRIEVAL_HIT_RATE = "retrieval_hit_rate"
    FEATURE_CENTROID = "feature_centroid"


@dataclass(frozen=True)
class DetectorConfig:
    window: int = 200
    stride: int = 10
    threshold: float = 4.0

    def __post_init__(self) -> None:
        if self.window < 20:
            raise ValueError("window must be >= 20")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")


@dataclass(frozen=True)
class ChangePoint:
    metric: DriftMetric
    at_seq: int
    at: datetime
    statistic: float
    threshold: float

    def to_json_value(self) -> dict[str, Any]:
        return {
            "metric": self.metric.value,
            "at_seq": self.at_seq,
            "at": format_timestamp(self.at),
            "statistic": self.statistic,
            "threshold": self.threshold,
        }

    @classmethod
    def from_json_value(cls, value: Mapping[str, Any]) -> "ChangePoint":
        return cls(
            metric=DriftMetric(value["metric"]),
            at_seq=value["at_seq"],
            at=parse_timestamp(value["at"]),
            statistic=value["statistic"],
            threshold=value["threshold"],
        )


# -- two-sample statistics ----------------------------------------------------


def two_proportion_z(hits_ref: int, n_ref: int, hits_cur: int, n_cur: int) -> float:
    """Pooled-variance two-proportion z; 0 when the pooled rate degenerates."""
    p_ref = hits_ref / n_ref
    p_cur = hits_cur / n_cur
    pooled = (hits_ref + hits_cur) / (n_ref + n_cur)
    if pooled <= 0.0 or pooled >= 1.0:
        return 0.0
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n_ref + 1.0 / n_cur))
    return (p_cur - p_ref) / se


def _mean_var(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((x - mean) ** 2 for x in values) / (n - 1)
    return mean, var


def welch_t(ref: Sequence[float], cur: Sequence[float]) -> float:
    """Welch's t for a mean shift; clamped instead of infinite when both
    windows are constant but unequal."""
    mean_ref, var_ref = _mean_var(ref)
    mean_cur, var_cur = _mean_var(cur)
    denom = math.sqrt(var_ref / len(ref) + var_cur / len(cur))
    diff = mean_cur - mean_ref
    if denom == 0.0:
        if diff == 0.0:
            return 0.0
        return _MAX_STAT if diff > 0 else -_MAX_STAT
    return diff / denom


def ks_statistic(ref: Sequence[float], cur: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov D (unscaled).

    Tied values advance both empirical CDFs together; the supremum is only
    evaluated between distinct values.
    """
    ref_sorted = sorted(ref)
    cur_sorted = sorted(cur)
    n_ref, n_cur = len(ref_sorted), len(cur_sorted)
    i = j = 0
    d = 0.0
    while i < n_ref and j < n_cur:
        value = min(ref_sorted[i], cur_sorted[j])
        while i < n_ref and ref_sorted[i] == value:
            i += 1
        while j < n_cur and cur_sorted[j] == value:
            j += 1
        d = max(d, abs(i / n_ref - j / n_cur))
    return d


def _feature_stat(
    ref: Sequence[tuple[float, ...]], cur: Sequence[tuple[float, ...]]
) -> float:
    dims = len(ref[0])
    best = 0.0
    for dim in range(dims):
        t = welch_t([v[dim] for v in ref], [v[dim] for v in cur])
        best = max(best, abs(t))
    return best


def _metric_values(records: Sequence[ResponseRecord], metric: DriftMetric) -> list:
    if metric is DriftMetric.REFUSAL_RATE:
        return [1 if r.metrics.refusal else 0 for r in records]
    if metric is DriftMetric.RETRIEVAL_HIT_RATE:
        return [1 if r.metrics.retrieval_hits > 0 else 0 for r in records]
    if metric in (DriftMetric.MEAN_LENGTH, DriftMetric.LENGTH_DISTRIBUTION):
        return [float(r.metrics.token_length) for r in records]
    dims: set[int] = set()
    values = []
    for r in records:
        if r.metrics.feature is None:
            raise InsufficientData(
                f"record seq {r.seq} has no feature vector for feature_centroid"
            )
        dims.add(len(r.metrics.feature))
        values.append(r.metrics.feature)
    if len(dims) > 1:
        raise InsufficientData("feature vectors have inconsistent dimensions")
    return values


def boundary_statistic(
    records: Sequence[ResponseRecord], metric: DriftMetric, position: int, window: int
) -> float:
    """The two-sample statistic comparing records[position-window:position]
    against records[position:position+window]."""
    values = _metric_values(records[position - window : position + window], metric)
    ref, cur = values[:window], values[window:]
    if metric in (DriftMetric.REFUSAL_RATE, DriftMetric.RETRIEVAL_HIT_RATE):
        return two_proportion_z(sum(ref), len(ref), sum(cur), len(cur))
    if metric is DriftMetric.MEAN_LENGTH:
        return welch_t(ref, cur)
    if metric is DriftMetric.LENGTH_DISTRIBUTION:
        return ks_statistic(ref, cur) * math.sqrt(window / 2.0)
    return _feature_stat(ref, cur)


def detect(
    stream: ResponseStream, metric: DriftMetric, config: DetectorConfig = DetectorConfig()
) -> list[ChangePoint]:
    """Slide a boundary through the stream and emit one change point per
    threshold excursion.

    After a point is emitted, further emissions for the metric are suppressed
    until the statistic falls back below the threshold (hysteresis), so a
    single shift yields a single point.
    """
    records = stream.records
    n = config.window
    if len(records) < 2 * n:
        raise InsufficientData(
            f"stream has {len(records)} records; detection needs at least {2 * n}"
        )
    points: list[ChangePoint] = []
    suppressed = False
    position = n
    while position + n <= len(records):
        stat = boundary_statistic(records, metric, position, n)
        if abs(stat) >= config.threshold:
            if not suppressed:
                boundary = records[position]
                points.append(
                    ChangePoint(
                        metric=metric,
                        at_seq=boundary.seq,
                        at=boundary.at,
                        statistic=stat,
                        threshold=config.threshold,
                    )
                )
                suppressed = True
        else:
            suppressed = False
        position += config.stride
    return points


# -- attribution ----------------------------------------------------------------


VERDICT_SINGLE = "single_candidate"
VERDICT_MULTIPLE = "multiple_candidates"
VERDICT_NONE = "no_candidate"


@dataclass(frozen=True)
class Attribution:
    change_point: ChangePoint
    candidates: tuple[ChangeEvent, ...]
    verdict: str

    def to_json_value(self) -> dict[str, Any]:
        return {
            "change_point": self.change_point.to_json_value(),
            "candidates": [c.to_json_value() for c in self.candidates],
            "verdict": self.verdict,
        }


def attribute(
    cp: ChangePoint, log: ChangeLog, lookback_seconds: float
) -> Attribution:
    """Correlate a change point against the artifact-change log.

    Candidates are the change events within [t(cp) - lookback, t(cp)],
    nearest preceding first; ties at identical timestamps are ordered by
    role name.
    """
    start = cp.at - timedelta(seconds=lookback_seconds)
    window = [e for e in log.events if start <= e.at <= cp.at]
    window.sort(key=lambda e: (-e.at.timestamp(), e.role))
    if not window:
        verdict = VERDICT_NONE
    elif len(window) == 1:
        verdict = VERDICT_SINGLE
    else:
        verdict = VERDICT_MULTIPLE
    return Attribution(change_point=cp, candidates=tuple(window), verdict=verdict)


# -- baselines -------------------------------------------------------------------


@dataclass(frozen=True)
class BaselineSummary:
    """Deterministic summary of a metric over a seq range.

    Proportion metrics report a rate; value metrics report mean/std (sample
    std, 0 with the degenerate flag when only one record). The histogram is
    keyed by exact value so summaries merge losslessly.
    """

    metric: DriftMetric
    count: int
    value_sum: float
    value_sum_sq: float
    histogram: tuple[tuple[str, int], ...]
    degenerate: bool

    @property
    def mean(self) -> float:
        return self.value_sum / self.count

    @property
    def std(self) -> float:
        if self.count < 2:
            return 0.0
        var = (self.value_sum_sq - self.value_sum * self.value_sum / self.count) / (
            self.count - 1
        )
        return math.sqrt(max(var, 0.0))

    @property
    def rate(self) -> float:
        return self.value_sum / self.count

    def to_json_value(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "metric": self.metric.value,
            "count": self.count,
            "degenerate": self.degenerate,
            "histogram": {key: count for key, count in self.histogram},
        }
        if self.metric in (DriftMetric.REFUSAL_RATE, DriftMetric.RETRIEVAL_HIT_RATE):
            out["rate"] = self.rate
        else:
            out["mean"] = self.mean
            out["std"] = self.std
        return out


def baseline(
    stream: ResponseStream,
    metric: DriftMetric,
    start_seq: int | None = None,
    end_seq: int | None = None,
) -> BaselineSummary:
    """Summarize a metric over the records with start_seq <= seq <= end_seq."""
    if metric is DriftMetric.FEATURE_CENTROID:
        raise InsufficientData("feature_centroid has no scalar baseline summary")
    records = [
        r
        for r in stream.records
        if (start_seq is None or r.seq >= start_seq)
        and (end_seq is None or r.seq <= end_seq)
    ]
    if not records:
        raise InsufficientData("no records in the requested seq range")
    values = _metric_values(records, metric)
    histogram: dict[str, int] = {}
    for value in values:
        key = str(int(value)) if float(value).is_integer() else repr(value)
        histogram[key] = histogram.get(key, 0) + 1
    return BaselineSummary(
        metric=metric,
        count=len(values),
        value_sum=float(sum(values)),
        value_sum_sq=float(sum(v * v for v in values)),
        histogram=tuple(sorted(histogram.items(), key=lambda kv: (len(kv[0]), kv[0]))),
        degenerate=len(values) == 1,
    )


def merge_baselines(a: BaselineSummary, b: BaselineSummary) -> BaselineSummary:
    """Combine summaries over disjoint ranges; exact for count/mean/sums."""
    if a.metric is not b.metric:
        raise ValueError("cannot merge summaries of different metrics")
    histogram: dict[str, int] = dict(a.histogram)
    for key, count in b.histogram:
        histogram[key] = histogram.get(key, 0) + count
    return BaselineSummary(
        metric=a.metric,
        count=a.count + b.count,
        value_sum=a.value_sum + b.value_sum,
        value_sum_sq=a.value_sum_sq + b.value_sum_sq,
        histogram=tuple(sorted(histogram.items(), key=lambda kv: (len(kv[0]), kv[0]))),
        degenerate=(a.count + b.count) == 1,
    )
