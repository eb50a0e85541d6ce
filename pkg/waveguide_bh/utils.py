"""Shared formatting utilities for waveguide-bh result files."""

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np

from waveguide_bh.observables import ObservableRecord

GENERATED_BY_KEY = "generated_by"


def format_number(value: float) -> str:
    """Shortest round-trip text for a real number."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def _json_number(value: float) -> Optional[float]:
    value = float(value)
    return None if math.isnan(value) else value


def metadata_line(metadata: dict[str, Any]) -> str:
    """Single '#'-prefixed header line carrying run metadata as sorted JSON."""
    return "# " + json.dumps(metadata, sort_keys=True, separators=(",", ":"))


class ResultFormatter:
    """Unified CSV/JSON formatting for time series, matrices and sweeps."""

    def timeseries_columns(self, L: int) -> list[str]:
        return ["t", "n_tot", "g2_avg", "G2_avg"] + [f"n_{k}" for k in range(L)]

    def _timeseries_row(self, record: ObservableRecord) -> list[float]:
        return [record.t, record.n_tot, record.g2_avg, record.G2_avg, *record.n_k]

    def format_timeseries(
        self,
        records: Sequence[ObservableRecord],
        metadata: dict[str, Any],
        output_format: str = "csv",
    ) -> str:
        L = len(records[0].n_k) if records else 0
        columns = self.timeseries_columns(L)
        rows = [self._timeseries_row(r) for r in records]
        return self._format_table(columns, rows, metadata, output_format)

    def format_sweep(
        self,
        param: str,
        rows: Sequence[tuple[float, float, float]],
        metadata: dict[str, Any],
        output_format: str = "csv",
    ) -> str:
        return self._format_table([param, "g2_avg", "n_tot"], rows, metadata, output_format)

    def _format_table(self, columns, rows, metadata, output_format) -> str:
        if output_format == "json":
            return json.dumps(
                {
                    "metadata": metadata,
                    "columns": columns,
                    "rows": [[_json_number(v) for v in row] for row in rows],
                },
                indent=2,
                sort_keys=True,
            ) + "\n"

        output = io.StringIO()
        output.write(metadata_line(metadata) + "\n")
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
        return output.getvalue()

    def format_matrix(
        self,
        matrix: np.ndarray,
        t: float,
        kind: str,
        output_format: str = "csv",
        excluded: Optional[int] = None,
    ) -> str:
        """Matrix snapshot; undefined entries are written as nan (null in JSON)."""
        L = matrix.shape[0]
        if output_format == "json":
            payload: dict[str, Any] = {
                "L": L,
                "t": float(t),
                "kind": kind,
                "values": [[_json_number(v) for v in row] for row in matrix],
            }
            if excluded is not None:
                payload["excluded"] = excluded
            return json.dumps(payload, indent=2, sort_keys=True) + "\n"

        header = f"# L={L} t={format_number(t)} kind={kind}"
        if excluded is not None:
            header += f" excluded={excluded}"
        lines = [header]
        lines += [",".join(format_number(v) for v in row) for row in matrix]
        return "\n".join(lines) + "\n"

    def format_report(self, report) -> str:
        """Human-readable equivalence summary."""
        lines = [
            f"{'Quantity':<28} {'Max deviation':>14}",
            "-" * 43,
            f"{'two-particle block':<28} {report.block_deviation:>14.3e}",
            f"{'site occupations':<28} {report.density_deviation:>14.3e}",
            f"{'pair correlations G2':<28} {report.correlation_deviation:>14.3e}",
            f"{'P2 vs grid norm':<28} {report.population_deviation:>14.3e}",
            f"{'vacuum coherence':<28} {report.vacuum_coherence:>14.3e}",
            f"{'one-particle population':<28} {report.single_particle_population:>14.3e}",
            f"{'min block purity':<28} {report.min_block_purity:>14.10f}",
        ]
        return "\n".join(lines)


_formatter = ResultFormatter()


def format_timeseries(records, metadata, output_format: str = "csv") -> str:
    return _formatter.format_timeseries(records, metadata, output_format)


def format_matrix(matrix, t, kind, output_format: str = "csv", excluded=None) -> str:
    return _formatter.format_matrix(matrix, t, kind, output_format, excluded)


def parse_numbers(text: Union[str, Iterable[Any], None]) -> list[float]:
    """'0, 2,4' or an iterable -> [0.0, 2.0, 4.0]."""
    if text is None:
        return []
    if isinstance(text, str):
        tokens = [tok for tok in text.replace(";", ",").split(",") if tok.strip()]
        return [float(tok) for tok in tokens]
    return [float(v) for v in text]


def read_data_lines(path: Union[str, Path]) -> list[str]:
    """Result file lines with the generated_by field removed.

    Two runs of the same configuration compare equal under this view even
    when produced by different code versions.
    """
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        if isinstance(payload.get("metadata"), dict):
            payload["metadata"].pop(GENERATED_BY_KEY, None)
        payload.pop(GENERATED_BY_KEY, None)
        return json.dumps(payload, indent=2, sort_keys=True).splitlines()

    lines = text.splitlines()
    if lines and lines[0].startswith("# {"):
        metadata = json.loads(lines[0][2:])
        metadata.pop(GENERATED_BY_KEY, None)
        lines[0] = metadata_line(metadata)
    return lines
