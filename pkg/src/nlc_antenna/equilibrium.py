"""Dimension-agnostic entry points for equilibrium solves and sweeps."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import solver1d
from .cell import CellStack, CellState
from .errors import InputError, SolverError
from .materials import LCMaterial
from .qtensor import LdGModel


def as_model(material_or_model) -> LdGModel:
    if isinstance(material_or_model, LdGModel):
        return material_or_model
    if isinstance(material_or_model, LCMaterial):
        return LdGModel(material_or_model)
    raise InputError("expected an LCMaterial or LdGModel")


def relax(stack: CellStack, material, voltage: float, *, dimensionality: int = 1, **options) -> CellState:
    model = as_model(material)
    if dimensionality == 1:
        return solver1d.relax(stack, model, voltage, **options)
    if dimensionality == 2:
        from . import solver2d

        return solver2d.relax(stack, model, voltage, **options)
    raise InputError("dimensionality must be 1 or 2")


def poisson_solve(state: CellState, stack: CellStack, material):
    model = as_model(material)
    if state.dimensionality == 1:
        return solver1d.poisson_solve(state, stack, model)
    from . import solver2d

    return solver2d.poisson_solve(state, stack, model)


def effective_permittivity(state: CellState, stack: CellStack, material, averaging: str = "mean") -> float:
    model = as_model(material)
    if state.dimensionality == 1:
        return solver1d.effective_permittivity(state, stack, model, averaging)
    from . import solver2d

    return solver2d.effective_permittivity(state, stack, model, averaging)


@dataclass(frozen=True)
class CurveRow:
    voltage: float
    eps_eff: float
    midplane_tilt: float
    energy: float
    converged: bool = True


@dataclass
class FreederickszCurve:
    rows: list
    states: list
    failure: SolverError | None = None

    @property
    def voltages(self):
        return np.array([r.voltage for r in self.rows])

    @property
    def eps(self):
        return np.array([r.eps_eff for r in self.rows])


def _solve_point(args):
    stack, model, voltage, averaging, options = args
    state = solver1d.relax(stack, model, voltage, **options)
    return state, solver1d.effective_permittivity(state, stack, model, averaging)


def freedericksz_curve(
    stack: CellStack,
    material,
    voltages,
    *,
    averaging: str = "mean",
    warm_start: bool = True,
    jobs: int = 1,
    keep_states: bool = False,
    raise_on_failure: bool = True,
    **options,
) -> FreederickszCurve:
    """One 1D relax per voltage.

    With ``warm_start`` each solve starts from the previous solution. If the
    previous solution is still (numerically) untilted the perturbed planar
    start is used instead, so a sweep crossing the threshold does not sit on
    the unstable symmetric state. ``jobs > 1`` requires ``warm_start=False``
    and runs the points in worker processes; rows stay in voltage order.
    """
    model = as_model(material)
    v = np.asarray(voltages, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InputError("voltages must be a non-empty 1D sequence")
    if np.any(np.diff(v) < 0):
        raise InputError("voltages must be sorted ascending")
    if jobs > 1 and warm_start:
        raise InputError("concurrent sweeps need warm_start=False")
    perturbation = options.get("perturbation", solver1d.TILT_PERTURBATION)
    curve = FreederickszCurve(rows=[], states=[])

    def record(voltage, state, eps):
        curve.rows.append(CurveRow(voltage, eps, solver1d.midplane_tilt(state), state.energy))
        if keep_states:
            curve.states.append(state)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_solve_point, [(stack, model, float(x), averaging, options) for x in v])
            try:
                for voltage, (state, eps) in zip(v, results):
                    record(float(voltage), state, eps)
            except SolverError as exc:
                curve.failure = exc
                if raise_on_failure:
                    raise
        return curve

    previous = None
    for voltage in v:
        initial = None
        if warm_start and previous is not None and solver1d.midplane_tilt(previous) >= perturbation:
            initial = previous
        try:
            state = solver1d.relax(stack, model, float(voltage), initial=initial, **options)
        except SolverError as exc:
            exc.voltage = float(voltage)
            curve.failure = exc
            if raise_on_failure:
                raise
            break
        record(float(voltage), state, solver1d.effective_permittivity(state, stack, model, averaging))
        previous = state
    return curve


def locate_threshold(voltages, eps, rel_tol: float = 1e-3) -> float:
    """Onset voltage of the Freedericksz curve.

    The curve is flat at ``eps(0)`` below threshold and rises linearly just
    above it. The secant through the first two points that leave the
    baseline (by more than ``rel_tol`` of the total swing) is extended back to
    the baseline; its intercept is the threshold.
    """
    v = np.asarray(voltages, dtype=float)
    e = np.asarray(eps, dtype=float)
    base = e[0]
    swing = e.max() - base
    if swing <= 0:
        raise InputError("curve never leaves its baseline")
    above = np.nonzero(e - base > rel_tol * swing)[0]
    i = above[0]
    if i + 1 >= v.size or i == 0:
        raise InputError("need a baseline point and two points above threshold")
    slope = (e[i + 1] - e[i]) / (v[i + 1] - v[i])
    return float(v[i] - (e[i] - base) / slope)


def max_slope_voltage(voltages, eps) -> float:
    """Midpoint of the sweep interval with the largest ``d eps / dV``."""
    v = np.asarray(voltages, dtype=float)
    slope = np.diff(np.asarray(eps, dtype=float)) / np.diff(v)
    k = int(np.argmax(slope))
    return float(0.5 * (v[k] + v[k + 1]))


def transmittance_profile_2d(state: CellState, stack: CellStack, material, wavelength: float = 532e-9, **options):
    from . import solver2d

    return solver2d.transmittance_profile_2d(state, stack, as_model(material), wavelength, **options)
