"""JSON Lines metrics stream, one record per training step."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

from slotswap.losses import LossReport

logger = logging.getLogger(__name__)

METRICS_NAME = "metrics.jsonl"


class MetricsWriter:
    """Appends loss reports to a metrics file.

    Records carry no timestamps, so two runs with the same seed write
    byte-identical files.

    Attributes:
        path: Metrics file
    """

    def __init__(self, path: Union[str, Path]) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def reset(self) -> None:
        """Start an empty stream."""
        self.path.write_text("")

    def append(self, iteration: int, report: LossReport) -> None:
        with open(self.path, "a") as f:
            f.write(json.dumps(report.to_record(iteration)) + "\n")

    def truncate(self, iteration: int) -> int:
        """Drop records of iterations after ``iteration`` (used on resume).

        Returns:
            Number of records kept
        """
        if not self.path.exists():
            self.reset()
            return 0
        kept = [r for r in read_metrics(self.path) if r["iter"] <= iteration]
        self.path.write_text("".join(json.dumps(r) + "\n" for r in kept))
        logger.debug(f"Truncated metrics to iteration {iteration} ({len(kept)} records)")
        return len(kept)


def read_metrics(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """Parse a metrics file into a list of records."""
    with open(path, "r") as f:
        return [json.loads(line) for line in f if line.strip()]
