"""Device geometry and solver state containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class CellStack:
    """Layered LC cell: cover dielectric / electrodes / LC / electrodes / cover.

    ``dielectric_layers`` lists ``(thickness_m, eps_rel)`` applied on each
    side of the LC. With ``dielectric_position="outside"`` they sit beyond
    the electrodes (they shape fringing fields of grid electrodes but carry
    no series voltage); with ``"inside"`` they sit between electrode and LC
    and form a series capacitor with it.
    """

    lc_thickness: float = 80e-6
    dielectric_layers: tuple = ((50e-6, 3.5),)
    dielectric_position: str = "outside"
    electrode_pattern: str = "grid"
    electrode_width: float = 1e-6
    electrode_gap: float = 49e-6
    electrode_offset: float = 0.0
    easy_axis: tuple = (1.0, 0.0, 0.0)
    anchoring_mode: str = "strong"
    grid_nz: int = 129
    grid_nx: int = 128

    def __post_init__(self):
        object.__setattr__(self, "dielectric_layers", tuple((float(t), float(e)) for t, e in self.dielectric_layers))
        object.__setattr__(self, "easy_axis", tuple(float(c) for c in self.easy_axis))
        if not self.lc_thickness > 0:
            raise InputError("lc_thickness must be positive")
        for t, e in self.dielectric_layers:
            if not (t > 0 and e > 0):
                raise InputError("dielectric layers need positive thickness and permittivity")
        if self.dielectric_position not in ("outside", "inside"):
            raise InputError("dielectric_position must be 'outside' or 'inside'")
        if self.electrode_pattern not in ("plate", "grid"):
            raise InputError("electrode_pattern must be 'plate' or 'grid'")
        if self.electrode_pattern == "grid" and not (self.electrode_width > 0 and self.electrode_gap > 0):
            raise InputError("grid electrodes need positive width and gap")
        if abs(np.linalg.norm(self.easy_axis) - 1.0) > 1e-12:
            raise InputError("easy_axis must be a unit vector")
        if self.anchoring_mode not in ("strong", "free"):
            raise InputError("anchoring_mode must be 'strong' or 'free'")
        if self.grid_nz < 17:
            raise InputError("grid_nz must be at least 17")
        if self.grid_nx < 4:
            raise InputError("grid_nx must be at least 4")

    @property
    def period(self) -> float:
        return self.electrode_width + self.electrode_gap

    @property
    def dz(self) -> float:
        return self.lc_thickness / (self.grid_nz - 1)

    def inside_resistance(self) -> float:
        """Sum of ``t / eps`` over series layers on both sides (m)."""
        if self.dielectric_position != "inside":
            return 0.0
        return 2.0 * sum(t / e for t, e in self.dielectric_layers)

    def replace(self, **changes) -> "CellStack":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class CellState:
    """Solution fields of one equilibrium solve.

    1D: ``q`` is ``(nz, 5)`` and ``potential`` ``(nz,)`` on the LC nodes.
    2D: ``q`` is ``(nx, nz, 5)`` on LC nodes, ``potential`` ``(nx, nz_total)``
    over the whole simulated height (cover layers included) and ``z_all``
    holds those node heights. ``z`` always measures from the bottom LC
    surface.
    """

    dimensionality: int
    q: np.ndarray
    potential: np.ndarray
    applied_voltage: float
    z: np.ndarray
    x: np.ndarray | None = None
    z_all: np.ndarray | None = None
    residual: float = float("nan")
    energy: float = float("nan")
    steps: int = 0
    converged: bool = False
    energy_history: list = field(default_factory=list)

    def copy(self) -> "CellState":
        return CellState(
            dimensionality=self.dimensionality,
            q=self.q.copy(),
            potential=self.potential.copy(),
            applied_voltage=self.applied_voltage,
            z=self.z,
            x=self.x,
            z_all=self.z_all,
            residual=self.residual,
            energy=self.energy,
            steps=self.steps,
            converged=self.converged,
            energy_history=list(self.energy_history),
        )
