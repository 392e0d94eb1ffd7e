"""Runtime values, valuations, traces and the trace CSV format."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction

from .ast import Value
from .errors import SynkitError

Valuation = dict[str, Value]


@dataclass
class Trace:
    """Finite input/output projection of an execution.

    `states`, when recorded, holds s_{-1} .. s_{k-1} (length k+1).
    """
    inputs: list[Valuation] = field(default_factory=list)
    outputs: list[Valuation] = field(default_factory=list)
    states: list[Valuation] | None = None

    def __len__(self) -> int:
        return len(self.outputs)

    def prefix(self, j: int) -> "Trace":
        return Trace(inputs=self.inputs[:j], outputs=self.outputs[:j],
                     states=self.states[: j + 1] if self.states is not None else None)

    def columns(self) -> list[str]:
        cols: list[str] = []
        for row in (self.inputs[0] if self.inputs else {},
                    self.outputs[0] if self.outputs else {}):
            cols.extend(k for k in row if k not in cols)
        return cols


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return str(v)


def parse_value(text: str, ty: str) -> Value:
    text = text.strip()
    if ty == "bool":
        if text in ("true", "1"):
            return True
        if text in ("false", "0"):
            return False
        raise SynkitError(f"bad bool value {text!r}")
    if ty == "int":
        return int(text)
    if ty == "real":
        return Fraction(text)
    raise SynkitError(f"unknown type {ty!r}")


def trace_to_csv(trace: Trace, columns: list[str] | None = None) -> str:
    cols = columns if columns is not None else trace.columns()
    out = io.StringIO()
    out.write("round," + ",".join(cols) + "\n")
    for r in range(len(trace)):
        row = dict(trace.inputs[r]) if r < len(trace.inputs) else {}
        row.update(trace.outputs[r])
        out.write(str(r) + "," + ",".join(format_value(row[c]) for c in cols) + "\n")
    return out.getvalue()


def csv_to_valuations(text: str, types: dict[str, str],
                      columns: list[str] | None = None) -> list[Valuation]:
    """Read a trace CSV back into per-round valuations (selected columns)."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise SynkitError("empty CSV")
    header = [h.strip() for h in lines[0].split(",")]
    if header[:1] != ["round"]:
        raise SynkitError("trace CSV must start with a 'round' column")
    names = header[1:]
    wanted = columns if columns is not None else [c for c in names if c in types]
    missing = [c for c in wanted if c not in names]
    if missing:
        raise SynkitError(f"CSV missing columns: {', '.join(missing)}")
    rows: list[Valuation] = []
    for ln in lines[1:]:
        cells = [c.strip() for c in ln.split(",")]
        if len(cells) != len(header):
            raise SynkitError(f"ragged CSV row: {ln!r}")
        vals = dict(zip(names, cells[1:]))
        rows.append({c: parse_value(vals[c], types[c]) for c in wanted})
    return rows
