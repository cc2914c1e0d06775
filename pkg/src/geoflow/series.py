"""Time-stamped diagnostic tables shared by every flow runner."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass
class DiagnosticSeries:
    """Ordered rows of (time, named scalar diagnostics).

    Rows must be appended with strictly increasing time.  Missing
    diagnostics serialize as empty CSV fields.
    """

    columns: tuple
    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def append(self, time: float, **values) -> None:
        if self.times and time <= self.times[-1]:
            raise ValueError(f"non-increasing time {time} after {self.times[-1]}")
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown diagnostic columns: {sorted(unknown)}")
        self.times.append(float(time))
        self.rows.append({k: float(v) for k, v in values.items() if v is not None})

    def column(self, name: str) -> list:
        """Values of one column; None where the row did not emit it."""
        if name == "t":
            return list(self.times)
        return [row.get(name) for row in self.rows]

    def __len__(self) -> int:
        return len(self.times)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("t",) + tuple(self.columns))
        for t, row in zip(self.times, self.rows):
            writer.writerow([_fmt(t)] + [_fmt(row.get(c)) for c in self.columns])
        return buf.getvalue()

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, path) -> "DiagnosticSeries":
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ConfigError("empty diagnostics CSV", field="header") from None
            if not header or header[0] != "t":
                raise ConfigError("diagnostics CSV must start with a 't' column", field="header")
            series = cls(columns=tuple(header[1:]))
            for line in reader:
                if not line:
                    continue
                t = float(line[0])
                vals = {
                    name: float(cell)
                    for name, cell in zip(series.columns, line[1:])
                    if cell != ""
                }
                series.append(t, **vals)
        return series


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))
