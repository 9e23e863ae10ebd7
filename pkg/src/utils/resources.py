import logging
import os
from dataclasses import dataclass
from datetime import datetime
from typing import Optional

import psutil

logger = logging.getLogger(__name__)


@dataclass
class ResourceSnapshot:
    """Resident memory and CPU share of the current process"""
    timestamp: datetime
    pid: int
    rss_mb: float
    cpu_percent: float
    thread_count: int = 0

    def describe(self) -> str:
        return f"rss={self.rss_mb:.1f}MB cpu={self.cpu_percent:.1f}% threads={self.thread_count}"


def snapshot(pid: Optional[int] = None) -> Optional[ResourceSnapshot]:
    """Current readings for ``pid`` (default: this process); None if unavailable"""
    pid = os.getpid() if pid is None else pid
    try:
        proc = psutil.Process(pid)
        with proc.oneshot():
            return ResourceSnapshot(
                timestamp=datetime.now(),
                pid=pid,
                rss_mb=proc.memory_info().rss / (1024 * 1024),
                cpu_percent=proc.cpu_percent(interval=None),
                thread_count=proc.num_threads(),
            )
    except (psutil.NoSuchProcess, psutil.AccessDenied) as e:
        logger.warning(f"Could not read resources of process {pid}: {e}")
        return None
