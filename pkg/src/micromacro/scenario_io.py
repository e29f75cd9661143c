"""Scenario documents (TOML), initial data, and CSV result files.

A scenario document looks like::

    variant = "lwr_ftl"            # lwr_ftl | ftl_lwr | general
    ell = 0.49
    platoons = [[0.0, 2.0, 4.0]]   # one position array per platoon
    leader_w = [[0.0, 0.75]]       # [t, w] breakpoints, lwr_ftl only
    density_pieces = [[-2.0, -0.5, 1.0]]   # [a, b, value]
    cfl = 0.9
    t_end = 15.0
    output_every = 0.5

    [speed_law]
    family = "greenshields"
    vmax = 1.0

    [grid]
    xmin = -12.0
    xmax = 20.0
    dx = 2.5e-3
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .coupler import HybridState, Segment, build_state, current_velocities, layout
from .errors import ScenarioError
from .ftl import MacroCoupled, PrescribedSpeed, VehicleColumn
from .lwr_grid import DensityField, cell_averages
from .speed_law import SpeedLaw

VARIANTS = ("lwr_ftl", "ftl_lwr", "general")
BUNDLED = ("lwr_ftl_fig2", "lwr_ftl_fig3", "ftl_lwr_fig4", "ftl_lwr_fig5", "general_fig1")


@dataclass(frozen=True)
class Scenario:
    variant: str
    speed_law: dict
    ell: float
    platoons: tuple
    density_pieces: tuple
    grid: dict
    cfl: float = 0.9
    t_end: float = 1.0
    output_every: float = 0.1
    leader_w: Optional[tuple] = None

    def law(self) -> SpeedLaw:
        return SpeedLaw.greenshields(self.speed_law["vmax"])

    def with_overrides(self, dx=None, cfl=None, t_end=None, output_every=None) -> "Scenario":
        grid = dict(self.grid)
        if dx is not None:
            grid["dx"] = float(dx)
        return replace(
            self,
            grid=grid,
            cfl=self.cfl if cfl is None else float(cfl),
            t_end=self.t_end if t_end is None else float(t_end),
            output_every=self.output_every if output_every is None else float(output_every),
        )


def _number(doc, key, path=None, positive=False, nonneg=False):
    path = path or key
    if key not in doc:
        raise ScenarioError(path, "missing")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
        raise ScenarioError(path, f"expected a finite number, got {value!r}")
    if positive and not value > 0:
        raise ScenarioError(path, "must be positive")
    if nonneg and value < 0:
        raise ScenarioError(path, "must be nonnegative")
    return float(value)


def _rows(doc, key, width=None, required=True):
    if key not in doc:
        if required:
            raise ScenarioError(key, "missing")
        return None
    rows = doc[key]
    if not isinstance(rows, list):
        raise ScenarioError(key, "expected an array of arrays")
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or (width is not None and len(row) != width):
            raise ScenarioError(f"{key}[{i}]", f"expected an array of {width or 'some'} numbers")
        vals = []
        for k, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x):
                raise ScenarioError(f"{key}[{i}][{k}]", f"expected a finite number, got {x!r}")
            vals.append(float(x))
        out.append(tuple(vals))
    return tuple(out)


def scenario_from_dict(doc: dict) -> Scenario:
    variant = doc.get("variant")
    if variant not in VARIANTS:
        raise ScenarioError("variant", f"expected one of {VARIANTS}, got {variant!r}")

    law_doc = doc.get("speed_law")
    if not isinstance(law_doc, dict):
        raise ScenarioError("speed_law", "missing table")
    if law_doc.get("family") != "greenshields":
        raise ScenarioError("speed_law.family", f"unsupported family {law_doc.get('family')!r}")
    vmax = _number(law_doc, "vmax", "speed_law.vmax", positive=True)

    grid_doc = doc.get("grid")
    if not isinstance(grid_doc, dict):
        raise ScenarioError("grid", "missing table")
    grid = {
        "xmin": _number(grid_doc, "xmin", "grid.xmin"),
        "xmax": _number(grid_doc, "xmax", "grid.xmax"),
        "dx": _number(grid_doc, "dx", "grid.dx", positive=True),
    }
    if not grid["xmax"] > grid["xmin"]:
        raise ScenarioError("grid.xmax", "must exceed grid.xmin")
    if (grid["xmax"] - grid["xmin"]) / grid["dx"] < 3:
        raise ScenarioError("grid.dx", "grid needs at least three cells")

    ell = _number(doc, "ell", positive=True)
    platoons = _rows(doc, "platoons")
    pieces = _rows(doc, "density_pieces", width=3)
    leader_w = _rows(doc, "leader_w", width=2, required=False)

    scenario = Scenario(
        variant=variant,
        speed_law={"family": "greenshields", "vmax": vmax},
        ell=ell,
        platoons=platoons,
        density_pieces=pieces,
        grid=grid,
        cfl=_number(doc, "cfl", positive=True) if "cfl" in doc else 0.9,
        t_end=_number(doc, "t_end", nonneg=True),
        output_every=_number(doc, "output_every", positive=True),
        leader_w=leader_w,
    )
    validate_scenario(scenario)
    return scenario


def validate_scenario(s: Scenario) -> None:
    vmax = s.speed_law["vmax"]
    if not s.platoons:
        raise ScenarioError("platoons", "at least one platoon is required")
    if s.variant in ("lwr_ftl", "ftl_lwr") and len(s.platoons) != 1:
        raise ScenarioError("platoons", f"{s.variant} takes exactly one platoon")
    for j, p in enumerate(s.platoons):
        if len(p) < 2:
            raise ScenarioError(f"platoons[{j}]", "a platoon needs at least two vehicles")
        for i in range(len(p) - 1):
            if p[i + 1] - p[i] < s.ell:
                raise ScenarioError(
                    f"platoons[{j}][{i + 1}]",
                    f"spacing {p[i + 1] - p[i]:.6g} to the previous vehicle is below ell = {s.ell}",
                )
    for j in range(len(s.platoons) - 1):
        if not s.platoons[j][-1] < s.platoons[j + 1][0]:
            raise ScenarioError(f"platoons[{j + 1}][0]", "platoons must be ordered and disjoint")

    if s.variant == "lwr_ftl":
        if not s.leader_w:
            raise ScenarioError("leader_w", "lwr_ftl needs a leader speed profile")
        if s.leader_w[0][0] != 0.0:
            raise ScenarioError("leader_w[0][0]", "first breakpoint must be at t = 0")
        for i, (t, w) in enumerate(s.leader_w):
            if i and t <= s.leader_w[i - 1][0]:
                raise ScenarioError(f"leader_w[{i}][0]", "breakpoints must increase")
            if not 0.0 <= w <= vmax:
                raise ScenarioError(f"leader_w[{i}][1]", f"leader speed must lie in [0, {vmax}]")
    elif s.leader_w is not None:
        raise ScenarioError("leader_w", f"a prescribed leader speed is meaningless for {s.variant}")

    spans = [(p[0], p[-1]) for p in s.platoons]
    ordered = sorted(enumerate(s.density_pieces), key=lambda item: item[1][0])
    for i, (a, b, value) in enumerate(s.density_pieces):
        if not b > a:
            raise ScenarioError(f"density_pieces[{i}]", "interval must have b > a")
        if not 0.0 <= value <= 1.0:
            raise ScenarioError(f"density_pieces[{i}][2]", "density must lie in [0, 1]")
        for lo, hi in spans:
            if a < hi and b > lo:
                raise ScenarioError(f"density_pieces[{i}]", "density overlaps a platoon span")
        if s.variant == "lwr_ftl" and b > spans[0][0]:
            raise ScenarioError(f"density_pieces[{i}]", "lwr_ftl density must lie left of the first vehicle")
        if s.variant == "ftl_lwr" and a < spans[0][1]:
            raise ScenarioError(f"density_pieces[{i}]", "ftl_lwr density must lie right of the leader")
    for (i, (_, b, _)), (k, (a, _, _)) in zip(ordered, ordered[1:]):
        if a < b:
            raise ScenarioError(f"density_pieces[{k}]", f"overlaps density_pieces[{i}]")

    g = s.grid
    lo = min([p[0] for p in s.platoons] + [a for a, _, _ in s.density_pieces])
    hi = max([p[-1] for p in s.platoons] + [b for _, b, _ in s.density_pieces])
    if not (g["xmin"] < lo and hi < g["xmax"]):
        raise ScenarioError("grid", f"grid [{g['xmin']}, {g['xmax']}] must strictly contain [{lo}, {hi}]")


def parse_scenario(text: str) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError("<document>", f"not valid TOML: {exc}") from None
    return scenario_from_dict(doc)


def scenario_to_dict(s: Scenario) -> dict:
    doc = {
        "variant": s.variant,
        "ell": s.ell,
        "platoons": [list(p) for p in s.platoons],
        "density_pieces": [list(p) for p in s.density_pieces],
        "cfl": s.cfl,
        "t_end": s.t_end,
        "output_every": s.output_every,
        "speed_law": dict(s.speed_law),
        "grid": dict(s.grid),
    }
    if s.leader_w is not None:
        doc["leader_w"] = [list(p) for p in s.leader_w]
    return doc


def serialize_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


def load_scenario(name_or_path) -> Scenario:
    """Load a bundled scenario by name or any scenario file by path.

    An unreadable file raises :class:`OSError`; a readable but invalid one
    raises :class:`ScenarioError`.
    """
    path = Path(name_or_path)
    if path.suffix != ".toml" and str(name_or_path) in BUNDLED:
        text = resources.files("micromacro.scenarios").joinpath(f"{name_or_path}.toml").read_text()
    else:
        text = path.read_text()
    return parse_scenario(text)


def _grid_cells(s: Scenario) -> int:
    g = s.grid
    return int(round((g["xmax"] - g["xmin"]) / g["dx"]))


def rasterize_density(s: Scenario) -> DensityField:
    """Exact cell averages of the initial density on the scenario grid."""
    g = s.grid
    n = _grid_cells(s)
    rho = cell_averages(g["xmin"], g["dx"], n, s.density_pieces)
    return DensityField(g["xmin"], g["dx"], rho)


def initial_state(s: Scenario) -> HybridState:
    g = s.grid
    n = _grid_cells(s)
    cols = [VehicleColumn.admissible(p, s.ell) for p in s.platoons]
    segs = []
    bounds = layout(s.variant, len(cols))
    for left, right in bounds:
        a = cols[left].leader if left is not None else -np.inf
        b = cols[right].first if right is not None else np.inf
        mine = [(pa, pb, v) for pa, pb, v in s.density_pieces if a <= pa and pb <= b]
        rho = cell_averages(g["xmin"], g["dx"], n, mine)
        segs.append(Segment(DensityField(g["xmin"], g["dx"], rho), left=left, right=right))
    if s.variant == "lwr_ftl":
        policies = [PrescribedSpeed.from_breakpoints(s.leader_w)]
    else:
        policies = [MacroCoupled(i + 1 if s.variant == "general" else 0) for i in range(len(cols))]
    return build_state(cols, policies, segs, variant=s.variant)


# -- outputs ---------------------------------------------------------------

DENSITY_HEADER = ("t", "x", "rho")
TRAJECTORY_HEADER = ("t", "platoon", "index", "position", "velocity")


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def write_outputs(history, sink, law: SpeedLaw) -> dict:
    """Write density.csv, trajectories.csv and diagnostics.csv into ``sink``.

    ``history`` is a sequence of ``(HybridState, DiagnosticsRecord)`` pairs.
    Platoons and vehicles are numbered from 1. Returns the written paths.
    """
    if not history:
        raise ValueError("history is empty")
    sink = Path(sink)
    sink.mkdir(parents=True, exist_ok=True)
    paths = {name: sink / f"{name}.csv" for name in ("density", "trajectories", "diagnostics")}

    with open(paths["density"], "w", newline="") as fh:
        fh.write(",".join(DENSITY_HEADER) + "\n")
        for state, _ in history:
            field = state.field
            t = _fmt(state.t)
            fh.writelines(f"{t},{_fmt(x)},{_fmt(r)}\n" for x, r in zip(field.centers, field.rho))

    with open(paths["trajectories"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for state, _ in history:
            for j, (col, vel) in enumerate(zip(state.platoons, current_velocities(state, law))):
                for i, (p, u) in enumerate(zip(col.positions, vel)):
                    writer.writerow([_fmt(state.t), j + 1, i + 1, _fmt(p), _fmt(u)])

    n_strips = len(history[0][1].strip_masses)
    with open(paths["diagnostics"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "total_mass", "min_spacing", "tv"] + [f"segment_mass_{j}" for j in range(1, n_strips + 1)])
        for _, rec in history:
            writer.writerow(
                [_fmt(rec.t), _fmt(rec.total_mass), _fmt(rec.min_spacing), _fmt(rec.total_variation)]
                + [_fmt(m) for m in rec.strip_masses]
            )
    return paths
