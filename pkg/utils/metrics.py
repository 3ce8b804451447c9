from typing import Any, Dict, Optional, Sequence, Type, TypeVar

from prometheus_client import REGISTRY, Counter, Gauge, Histogram, generate_latest
from prometheus_client.metrics import MetricWrapperBase

_M = TypeVar("_M", bound=MetricWrapperBase)

DURATION_BUCKETS = (0.01, 0.1, 0.5, 1.0, 5.0, 10.0, 30.0, 60.0, 120.0, 300.0)

# attribute -> (collector type, metric name, help text, labels, extra kwargs)
DEFAULT_METRICS: Dict[str, tuple] = {
    "suite_runs_total": (
        Counter, "mixlab_suite_runs_total", "Suite executions by outcome", ("suite", "status"), {}
    ),
    "suite_duration_seconds": (
        Histogram,
        "mixlab_suite_duration_seconds",
        "Wall time of one suite execution",
        ("suite",),
        {"buckets": DURATION_BUCKETS},
    ),
    "trials_total": (
        Counter, "mixlab_trials_total", "Monte Carlo trials completed", ("suite",), {}
    ),
    "checks_total": (
        Counter,
        "mixlab_checks_total",
        "Acceptance checks recorded by outcome",
        ("suite", "outcome"),
        {},
    ),
    "events_sampled_total": (
        Counter, "mixlab_events_sampled_total", "Nonzero field sites drawn", ("level",), {}
    ),
    "enumerated_configurations_total": (
        Counter,
        "mixlab_enumerated_configurations_total",
        "Ternary configurations enumerated by exact oracles",
        ("kind",),
        {},
    ),
    "capacity_errors_total": (
        Counter, "mixlab_capacity_errors_total", "Budget and capacity refusals", ("kind",), {}
    ),
    "suites_in_progress": (Gauge, "mixlab_suites_in_progress", "Suites currently executing", (), {}),
}


class MetricsCollector:
    """Process-wide laboratory metrics with get-or-create semantics.

    Suites and samplers report through the attributes named in
    ``DEFAULT_METRICS``; the text exposition can be written next to a run with
    ``export_text`` but is never part of the reproducible artifacts.
    """

    suite_runs_total: Counter
    suite_duration_seconds: Histogram
    trials_total: Counter
    checks_total: Counter
    events_sampled_total: Counter
    enumerated_configurations_total: Counter
    capacity_errors_total: Counter
    suites_in_progress: Gauge

    def __init__(self) -> None:
        self._initialized: bool = False

    @staticmethod
    def _registered(name: str) -> Optional[Any]:
        # counters register under their base name as well as *_total
        base = name[: -len("_total")] if name.endswith("_total") else name
        for candidate in (name, base):
            collector = REGISTRY._names_to_collectors.get(candidate)
            if collector is not None:
                return collector
        return None

    def get_or_create(
        self,
        kind: Type[_M],
        name: str,
        description: str,
        labelnames: Sequence[str] = (),
        **kwargs: Any,
    ) -> _M:
        """Existing collector of ``kind`` registered as ``name``, or a new one."""
        existing = self._registered(name)
        if existing is None:
            return kind(name, description, labelnames=list(labelnames), **kwargs)
        if not isinstance(existing, kind):
            raise ValueError(
                f"metric '{name}' is already registered as {type(existing).__name__}, "
                f"not {kind.__name__}"
            )
        return existing

    def initialize_defaults(self) -> None:
        if self._initialized:
            return
        for attribute, (kind, name, description, labels, kwargs) in DEFAULT_METRICS.items():
            setattr(self, attribute, self.get_or_create(kind, name, description, labels, **kwargs))
        self._initialized = True

    def export_text(self) -> bytes:
        return generate_latest(REGISTRY)


metrics = MetricsCollector()
metrics.initialize_defaults()
