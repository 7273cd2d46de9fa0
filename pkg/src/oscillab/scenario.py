"""Scenario files: TOML descriptions of amplitude, phase, grids, and the
requested analyses, plus load-time validation of their preconditions."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import expr as ex
from . import powerlog as pl
from .phase import PhaseModel

KNOWN_ANALYSES = ("decay", "vdc", "hyperplane", "proofkit", "fourier", "basis")


class ScenarioError(Exception):
    """Malformed scenario file (parse-level)."""


class PreconditionError(Exception):
    """Scenario parsed but an analysis precondition is violated."""


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    analyses: tuple
    dimension: int
    amplitude_cells: tuple  # raw cell mappings
    phase_texts: tuple
    derivative_bound: int | None
    xi: tuple
    lambda_min: float
    lambda_max: float
    lambda_points: int
    tol: float
    x_grid: tuple  # of parameter tuples; () means no sweep
    options: dict = field(default_factory=dict)  # per-analysis sections
    path: Path | None = None

    @property
    def n(self) -> int:
        return len(self.phase_texts)

    def amplitude(self, x: Sequence[float] = ()) -> pl.PiecewisePowerLog:
        return pl.amplitude_from_mapping(self.amplitude_cells, params=tuple(x))

    def phase(self, x: Sequence[float] = ()) -> PhaseModel:
        return PhaseModel.from_exprs(self.phase_texts, self.dimension,
                                     self.derivative_bound, params=tuple(x))

    def parameter_grid(self) -> tuple:
        return self.x_grid if self.x_grid else ((),)


def scenario_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ScenarioError(f"missing key {key!r} in {where}")
    return data[key]


def load(path) -> Scenario:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as err:
        raise ScenarioError(f"cannot parse scenario {path}: {err}") from err

    name = str(_require(data, "name", "scenario"))
    seed = int(data.get("seed", 0))
    analyses = tuple(str(a) for a in _require(data, "analyses", "scenario"))
    for a in analyses:
        if a not in KNOWN_ANALYSES:
            raise ScenarioError(f"unknown analysis {a!r}")

    amp = data.get("amplitude", {})
    dimension = int(amp.get("dimension", 1))
    cells = tuple(amp.get("cells", ()))
    if not cells and set(analyses) - {"basis", "hyperplane"}:
        raise ScenarioError("amplitude.cells is required for this analysis set")

    ph = data.get("phase", {})
    phase_texts = tuple(str(t) for t in ph.get("components", ()))
    bound = ph.get("derivative_bound")
    bound = int(bound) if bound is not None else None
    if not phase_texts and set(analyses) - {"basis"}:
        raise ScenarioError("phase.components is required for this analysis set")

    grids = data.get("grids", {})
    xi = tuple(float(v) for v in grids.get("xi", (1.0,) * max(1, len(phase_texts))))
    lam_min = float(grids.get("lambda_min", 10.0))
    lam_max = float(grids.get("lambda_max", 1e4))
    lam_points = int(grids.get("lambda_points", 48))
    tol = float(grids.get("tol", 1e-9))

    params = data.get("parameters", {})
    x_grid = tuple(tuple(float(v) for v in row) for row in params.get("grid", ()))

    options = {key: data[key] for key in KNOWN_ANALYSES if key in data}

    scenario = Scenario(name, seed, analyses, dimension, cells, phase_texts,
                        bound, xi, lam_min, lam_max, lam_points, tol, x_grid,
                        options, path)
    _validate(scenario)
    return scenario


def _validate(s: Scenario) -> None:
    """Syntax-level checks (ScenarioError) and declared-precondition checks
    (PreconditionError) before any analysis runs."""
    try:
        for text in s.phase_texts:
            ex.parse(text)
        for cdata in s.amplitude_cells:
            for t in cdata.get("terms", ()):
                if isinstance(t.get("coefficient"), str):
                    ex.parse(t["coefficient"])
                if "unit" in t and str(t["unit"]).strip() not in ("", "1"):
                    ex.parse(str(t["unit"]))
    except ex.ParseError as err:
        raise ScenarioError(f"expression error: {err}") from err

    norm = math.sqrt(sum(v * v for v in s.xi))
    if s.phase_texts and abs(norm - 1.0) > 1e-12:
        raise PreconditionError(f"xi must be a unit vector (norm {norm})")
    if s.phase_texts and len(s.xi) != s.n:
        raise PreconditionError("xi length must match the number of phase components")
    if s.dimension not in (1, 2):
        raise PreconditionError("supported dimensions are 1 and 2")
    if "fourier" in s.analyses and (s.dimension != 1 or s.n != 1):
        raise PreconditionError("fourier analysis requires m = n = 1")
    if "vdc" in s.analyses and s.dimension != 1:
        raise PreconditionError("vdc analysis requires m = 1")
    if "proofkit" in s.analyses and not s.amplitude_cells:
        raise PreconditionError("proofkit analysis requires an amplitude")

    # build once per parameter point: malformed cells or non-positive units
    # must fail at load, not mid-analysis
    for x in s.parameter_grid():
        try:
            f = s.amplitude(x) if s.amplitude_cells else None
        except (ValueError, ex.ExprError) as err:
            raise ScenarioError(f"amplitude error: {err}") from err
        if f is not None and set(s.analyses) - {"basis", "hyperplane"}:
            report = pl.is_integrable(f)
            if not report.all_integrable:
                bad = [v for v in report.verdicts if not v.integrable]
                raise PreconditionError(
                    f"amplitude not integrable (piece {bad[0].piece}, term {bad[0].term})")
        if f is not None:
            for cell, terms in f.pieces:
                for term in terms:
                    if term.unit.bound is not None:
                        try:
                            pl.validate_unit(term, cell, samples=2048)
                        except pl.UnitValidationError as err:
                            raise PreconditionError(f"unit validation failed: {err}") from err
