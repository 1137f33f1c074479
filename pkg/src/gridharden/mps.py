"""Free-format MPS emission and an independent reader.

Emission is byte-deterministic: rows and columns appear in model
declaration order, numbers are rendered with Python's shortest round-trip
`repr`, and every variable gets explicit bounds (readers disagree on
integer-variable defaults). The reader is written against the MPS section
grammar, not against the emitter, so emit->parse round trips are a real
check; RANGES sections are intentionally rejected because the emitter
expresses two-sided windows as row pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import SENSE_EQ, SENSE_GE, SENSE_LE, MilpModel

OBJ_ROW = "OBJ"

_SENSE_TO_MPS = {SENSE_LE: "L", SENSE_GE: "G", SENSE_EQ: "E"}
_MPS_TO_SENSE = {v: k for k, v in _SENSE_TO_MPS.items()}


def _num(x: float) -> str:
    return repr(float(x))


def emit_model_file(model: MilpModel) -> str:
    """Render the model as free-format MPS text."""
    out: list[str] = [f"NAME {model.name}", "ROWS", f" N {OBJ_ROW}"]
    for row in model.rows:
        out.append(f" {_SENSE_TO_MPS[row.sense]} {row.name}")

    out.append("COLUMNS")
    row_pos = {row.name: i for i, row in enumerate(model.rows)}
    in_integer = False
    marker = 0
    for var in model.variables:
        if var.name is None or not var.name:
            raise ValueError("unnamed variable in model")
        if var.is_integer and not in_integer:
            marker += 1
            out.append(f"    MARK{marker} 'MARKER' 'INTORG'")
            in_integer = True
        elif not var.is_integer and in_integer:
            marker += 1
            out.append(f"    MARK{marker} 'MARKER' 'INTEND'")
            in_integer = False
        if var.name in model.objective:
            out.append(f"    {var.name} {OBJ_ROW} {_num(model.objective[var.name])}")
        entries = [(row_pos[row.name], row.name, row.coeffs[var.name])
                   for row in model.rows if var.name in row.coeffs]
        for _, row_name, coef in sorted(entries):
            out.append(f"    {var.name} {row_name} {_num(coef)}")
    if in_integer:
        marker += 1
        out.append(f"    MARK{marker} 'MARKER' 'INTEND'")

    out.append("RHS")
    for row in model.rows:
        if row.rhs != 0.0:
            out.append(f"    RHS {row.name} {_num(row.rhs)}")

    out.append("BOUNDS")
    for var in model.variables:
        lb, ub = var.lb, var.ub
        if lb == ub:
            out.append(f" FX BND {var.name} {_num(lb)}")
            continue
        if math.isinf(lb) and math.isinf(ub):
            out.append(f" FR BND {var.name}")
            continue
        if math.isinf(lb):
            out.append(f" MI BND {var.name}")
        else:
            out.append(f" LO BND {var.name} {_num(lb)}")
        if math.isinf(ub):
            out.append(f" PL BND {var.name}")
        else:
            out.append(f" UP BND {var.name} {_num(ub)}")

    out.append("ENDATA")
    return "\n".join(out) + "\n"


@dataclass
class ParsedModel:
    """Model reconstructed from MPS text."""

    name: str = ""
    var_order: list[str] = field(default_factory=list)
    integer: set[str] = field(default_factory=set)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    objective: dict[str, float] = field(default_factory=dict)
    rows: list[tuple[str, str, float, dict[str, float]]] = field(default_factory=list)
    # rows: (name, sense, rhs, coeffs)

    def to_model(self) -> MilpModel:
        model = MilpModel(self.name or "parsed")
        for v in self.var_order:
            lb, ub = self.bounds.get(v, (0.0, math.inf))
            model.add_variable(v, lb, ub, integer=v in self.integer)
        for name, sense, rhs, coeffs in self.rows:
            model.add_row(name, coeffs, sense, rhs, tag="mps")
        model.set_objective(self.objective)
        return model


def parse_mps(text: str) -> ParsedModel:
    """Read free-format MPS (ROWS/COLUMNS/RHS/BOUNDS; no RANGES)."""
    parsed = ParsedModel()
    row_sense: dict[str, str] = {}
    row_coeffs: dict[str, dict[str, float]] = {}
    row_rhs: dict[str, float] = {}
    row_order: list[str] = []
    obj_row: str | None = None
    seen_vars: set[str] = set()
    explicit_bounds: dict[str, list[tuple[str, float | None]]] = {}

    section = None
    in_integer = False
    for raw in text.splitlines():
        line = raw.rstrip()
        if not line or line.lstrip().startswith("*"):
            continue
        if not raw[0].isspace():
            head = line.split()
            keyword = head[0].upper()
            if keyword == "NAME":
                parsed.name = head[1] if len(head) > 1 else ""
                section = "NAME"
            elif keyword in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
                section = keyword
            elif keyword == "RANGES":
                raise ValueError("RANGES sections are not supported")
            elif keyword == "OBJSENSE":
                section = "OBJSENSE"
            else:
                raise ValueError(f"unknown MPS section {keyword!r}")
            continue

        tokens = line.split()
        if section == "ROWS":
            kind, name = tokens[0].upper(), tokens[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = name
                continue
            row_sense[name] = _MPS_TO_SENSE[kind]
            row_coeffs[name] = {}
            row_rhs[name] = 0.0
            row_order.append(name)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                in_integer = tokens[2] == "'INTORG'"
                continue
            var = tokens[0]
            if var not in seen_vars:
                seen_vars.add(var)
                parsed.var_order.append(var)
                if in_integer:
                    parsed.integer.add(var)
            pairs = tokens[1:]
            if len(pairs) % 2 != 0:
                raise ValueError(f"odd COLUMNS entry: {line!r}")
            for rname, value in zip(pairs[::2], pairs[1::2]):
                coef = float(value)
                if rname == obj_row:
                    parsed.objective[var] = parsed.objective.get(var, 0.0) + coef
                elif rname in row_sense:
                    d = row_coeffs[rname]
                    d[var] = d.get(var, 0.0) + coef
                else:
                    raise ValueError(f"COLUMNS references unknown row {rname!r}")
        elif section == "RHS":
            pairs = tokens[1:]
            if len(pairs) % 2 != 0:
                raise ValueError(f"odd RHS entry: {line!r}")
            for rname, value in zip(pairs[::2], pairs[1::2]):
                if rname == obj_row:
                    continue  # objective offset unused
                if rname not in row_sense:
                    raise ValueError(f"RHS references unknown row {rname!r}")
                row_rhs[rname] = float(value)
        elif section == "BOUNDS":
            kind = tokens[0].upper()
            var = tokens[2]
            value = float(tokens[3]) if len(tokens) > 3 else None
            if var not in seen_vars:
                seen_vars.add(var)
                parsed.var_order.append(var)
            explicit_bounds.setdefault(var, []).append((kind, value))
        elif section in ("ENDATA", "NAME", "OBJSENSE"):
            continue
        else:
            raise ValueError(f"data line outside any section: {line!r}")

    for var in parsed.var_order:
        lb, ub = 0.0, math.inf
        for kind, value in explicit_bounds.get(var, []):
            if kind == "LO":
                lb = value
            elif kind == "UP":
                ub = value
            elif kind == "FX":
                lb = ub = value
            elif kind == "FR":
                lb, ub = -math.inf, math.inf
            elif kind == "MI":
                lb = -math.inf
            elif kind == "PL":
                ub = math.inf
            elif kind == "BV":
                lb, ub = 0.0, 1.0
                parsed.integer.add(var)
            elif kind in ("UI", "LI"):
                parsed.integer.add(var)
                if kind == "UI":
                    ub = value
                else:
                    lb = value
            else:
                raise ValueError(f"unsupported bound type {kind!r}")
        parsed.bounds[var] = (lb, ub)

    for name in row_order:
        parsed.rows.append((name, row_sense[name], row_rhs[name], row_coeffs[name]))
    return parsed
