"""Result store: one output directory per run, no shared appends."""

import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from waveguide_bh.exceptions import ConfigError
from waveguide_bh.observables import ObservableRecord
from waveguide_bh.utils import ResultFormatter, format_number

SNAPSHOT_KINDS = ("G2", "g2", "intensity")


class ResultStore:
    """Writes time series, matrix snapshots, sweeps and oracle reports."""

    def __init__(self, out_dir: Union[str, Path]) -> None:
        """Initialize the store.

        Args:
            out_dir: Directory receiving all files of this run
        """
        self.out_dir = Path(out_dir)
        self.snapshot_dir = self.out_dir / "snapshots"
        self.formatter = ResultFormatter()

    def _get_file_path(self, name: str, file_type: str, fmt: str = "csv") -> Path:
        """Get standardized path for a result file.

        Args:
            name: Base file name (snapshot files: "<kind>_t<time>")
            file_type: "data", "snapshot" or "report"
            fmt: File format extension

        Returns:
            Path to the file
        """
        if file_type == "data":
            return self.out_dir / f"{name}.{fmt}"
        elif file_type == "snapshot":
            return self.snapshot_dir / f"{name}.{fmt}"
        elif file_type == "report":
            return self.out_dir / f"{name}.json"
        else:
            raise ValueError(f"Unknown file type: {file_type}")

    def _write_text(self, path: Path, text: str) -> Path:
        """Write text, creating parent directories.

        Raises:
            ConfigError: If the file cannot be written
        """
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Failed to write {path}: {e}", str(path))
        return path

    def save_timeseries(
        self,
        records: Sequence[ObservableRecord],
        metadata: Dict[str, Any],
        fmt: str = "csv",
    ) -> Path:
        text = self.formatter.format_timeseries(records, metadata, fmt)
        return self._write_text(self._get_file_path("timeseries", "data", fmt), text)

    def save_snapshot(self, record: ObservableRecord, fmt: str = "csv") -> List[Path]:
        """Write G2, g2 and raw-intensity matrices of one sample."""
        matrices = {"G2": record.G2, "g2": record.g2, "intensity": record.intensity}
        paths = []
        for kind in SNAPSHOT_KINDS:
            excluded = int((~record.g2_defined).sum()) if kind == "g2" else None
            text = self.formatter.format_matrix(
                matrices[kind], record.t, kind, fmt, excluded
            )
            name = f"{kind}_t{format_number(record.t)}"
            paths.append(self._write_text(self._get_file_path(name, "snapshot", fmt), text))
        return paths

    def save_sweep(
        self,
        param: str,
        rows: Sequence[tuple[float, float, float]],
        metadata: Dict[str, Any],
        fmt: str = "csv",
    ) -> Path:
        text = self.formatter.format_sweep(param, rows, metadata, fmt)
        return self._write_text(self._get_file_path("sweep", "data", fmt), text)

    def save_report(self, name: str, data: Dict[str, Any]) -> Path:
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
        return self._write_text(self._get_file_path(name, "report"), text)
