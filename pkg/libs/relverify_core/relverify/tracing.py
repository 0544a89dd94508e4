"""OpenTelemetry spans around pipeline phases, a no-op without the ``tracing`` extra."""
from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

from .metrics import MET_PHASE_SECONDS

try:
    from opentelemetry import trace
    from opentelemetry.trace import Status, StatusCode

    TRACING_AVAILABLE = True
except ImportError:  # pragma: no cover - optional dependency
    TRACING_AVAILABLE = False

log = logging.getLogger("relverify.pipeline")


def get_tracer(service_name: str = "relverify"):
    if not TRACING_AVAILABLE:
        return None
    return trace.get_tracer(f"{service_name}.tracer")


@contextmanager
def trace_operation(operation_name: str, attributes: Optional[Dict[str, Any]] = None) -> Iterator[Any]:
    """Span ``operation_name`` when tracing is installed; always time it."""
    start = time.perf_counter()
    try:
        tracer = get_tracer()
        if tracer is None:
            yield None
            return
        with tracer.start_as_current_span(operation_name) as span:
            try:
                for key, value in (attributes or {}).items():
                    span.set_attribute(key, str(value))
                yield span
            except Exception as e:
                span.set_status(Status(StatusCode.ERROR, str(e)))
                span.record_exception(e)
                raise
    finally:
        elapsed = time.perf_counter() - start
        MET_PHASE_SECONDS.labels(phase=operation_name).observe(elapsed)
        log.debug("phase %s: %.3fs", operation_name, elapsed)


__all__ = ["TRACING_AVAILABLE", "get_tracer", "trace_operation"]
