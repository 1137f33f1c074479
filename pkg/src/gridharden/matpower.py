"""Convert MATPOWER-style case files into the network JSON layout.

Only the electrical data is taken from the case file (bus ids, branch
susceptances/ratings/angle limits, generator limits); demand profiles and
line geometry are supplied separately and merged by the caller. Flow
ratings and generation limits are rescaled to per-unit on the case's
baseMVA. Branch reactance x maps to susceptance -1/x so the DC flow rows
(f = -b * angle difference) recover f = (angle difference)/x; MATPOWER's
"0 means unconstrained" conventions become a wide rating or the big-M
angle window.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

UNLIMITED_FLOW_PU = 100.0
UNLIMITED_ANGLE_RAD = 2.0 * math.pi

_MATRIX_RE = re.compile(r"mpc\.(\w+)\s*=\s*\[(.*?)\];", re.DOTALL)
_SCALAR_RE = re.compile(r"mpc\.(\w+)\s*=\s*([0-9.eE+-]+)\s*;")


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%", 1)[0] for line in text.splitlines())


def _parse_matrix(block: str) -> list[list[float]]:
    rows = []
    for chunk in re.split(r"[;\n]", block):
        chunk = chunk.strip()
        if not chunk:
            continue
        rows.append([float(tok) for tok in chunk.replace(",", " ").split()])
    return rows


def matpower_to_network_doc(case_text: str, periods_per_day: int = 1,
                            demand_from_pd: bool = False) -> dict:
    """Parse a case file into a network JSON document (single-day horizon).

    With `demand_from_pd` the bus PD column seeds a flat one-day demand
    profile; otherwise demand starts at zero for a later merge.
    """
    text = _strip_comments(case_text)
    matrices = {m.group(1): _parse_matrix(m.group(2))
                for m in _MATRIX_RE.finditer(text)}
    scalars = {m.group(1): float(m.group(2)) for m in _SCALAR_RE.finditer(text)}
    if "bus" not in matrices or "branch" not in matrices:
        raise ValueError("case file lacks mpc.bus or mpc.branch")
    base_mva = scalars.get("baseMVA", 100.0)

    buses = []
    for row in matrices["bus"]:
        bus_id = str(int(row[0]))
        pd_pu = row[2] / base_mva if demand_from_pd else 0.0
        buses.append({
            "id": bus_id,
            "demand": [[pd_pu] * periods_per_day],
            "population": 0.0,
            "group_fractions": {},
            "vuln_fraction": {},
            "location": [0.0, 0.0],
        })

    lines = []
    for i, row in enumerate(matrices["branch"]):
        status = row[10] if len(row) > 10 else 1.0
        if status == 0.0:
            continue
        x = row[3]
        if x == 0.0:
            raise ValueError(f"branch {i}: zero reactance is not representable")
        rate_a = row[5] if len(row) > 5 else 0.0
        flow_limit = rate_a / base_mva if rate_a > 0 else UNLIMITED_FLOW_PU
        ang_min = math.radians(row[11]) if len(row) > 11 and row[11] != 0 else -UNLIMITED_ANGLE_RAD
        ang_max = math.radians(row[12]) if len(row) > 12 and row[12] != 0 else UNLIMITED_ANGLE_RAD
        lines.append({
            "id": f"br{i}",
            "from_bus": str(int(row[0])),
            "to_bus": str(int(row[1])),
            "susceptance": -1.0 / x,
            "flow_limit": flow_limit,
            "angle_min": ang_min,
            "angle_max": ang_max,
            "length": 0.0,
            "underground_cost": 0.0,
            "path": [],
        })

    generators = []
    for i, row in enumerate(matrices.get("gen", [])):
        status = row[7] if len(row) > 7 else 1.0
        if status == 0.0:
            continue
        p_max = row[8] / base_mva if len(row) > 8 else 0.0
        p_min = row[9] / base_mva if len(row) > 9 else 0.0
        generators.append({
            "id": f"g{i}",
            "bus": str(int(row[0])),
            "p_min": max(0.0, p_min),
            "p_max": p_max,
        })

    return {
        "horizon": {"days": [0], "periods_per_day": periods_per_day,
                    "base_power": base_mva},
        "buses": buses,
        "lines": lines,
        "generators": generators,
        "group_families": [],
    }


def load_matpower_case(path: str | Path, **kwargs) -> dict:
    return matpower_to_network_doc(Path(path).read_text(), **kwargs)
