"""Equilibrium of a 1D cell (variation across the LC thickness only).

The LC is discretised with linear elements on ``grid_nz`` nodes. The discrete
energy per unit area is

    F = sum_k L/(2h) |q_{k+1} - q_k|^2_G + sum_i w_i f_th(q_i) - eps0 V^2 / (2 rho)

(``f_th`` measured from the undistorted zero-field nematic, so ``F`` is the
distortion plus field energy) where ``rho = sum_k h / eps_zz,k`` (plus series cover layers) and
``eps_zz,k`` uses the interval-averaged tensor. The potential for a given
tensor field is exact (constant displacement across the stack), so the
electrostatic term is already the constant-voltage reduced energy and every
derivative below is of that reduced functional.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg

from .cell import CellStack, CellState
from .errors import InputError, SolverError, StagnationError
from .materials import EPS0
from .qtensor import GRAM, GRAM_INV, LdGModel, covector_to_tensor, retract, tilt_angle, unpack

log = logging.getLogger(__name__)

TILT_PERTURBATION = 1e-3
DT_MAX = 1e12


def solve_potential_layers(widths, eps, voltage):
    """Potential at the interfaces of a series stack of planar layers.

    Returns ``len(widths) + 1`` values from 0 (bottom) to ``voltage`` (top).
    """
    widths = np.asarray(widths, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise InputError("layer permittivities must be positive")
    drops = widths / eps
    return voltage * np.concatenate([[0.0], np.cumsum(drops)]) / drops.sum()


class Discrete1D:
    """Discrete energy, gradient and Hessian of the 1D reduced functional."""

    def __init__(self, stack: CellStack, model: LdGModel, voltage: float):
        n = stack.grid_nz
        self.stack = stack
        self.model = model
        self.voltage = float(voltage)
        self.n = n
        self.h = stack.dz
        self.w = np.full(n, self.h)
        self.w[[0, -1]] = 0.5 * self.h
        self.rho_series = stack.inside_resistance()
        self.ce = model.material.delta_eps / model.s_dielectric
        self.lval = model.elastic_l
        if stack.anchoring_mode == "strong":
            self.free = np.arange(1, n - 1)
        else:
            self.free = np.arange(n)
        self.force_scale = self.lval / stack.lc_thickness**2
        # bulk energy density of the undistorted nematic, subtracted from F
        self.f_bulk = float(model.thermotropic(model.uniaxial(np.array([1.0, 0.0, 0.0]))))

    # pieces ------------------------------------------------------------------

    def eps_intervals(self, q):
        return self.model.eps_zz(0.5 * (q[1:] + q[:-1]))

    def rho(self, q):
        return self.rho_series + np.sum(self.h / self.eps_intervals(q))

    def energy_parts(self, q):
        d = np.diff(q, axis=0)
        el = 0.5 * self.lval / self.h * np.einsum("ka,ab,kb->", d, GRAM, d)
        th = float(np.dot(self.w, self.model.thermotropic(q) - self.f_bulk))
        eps = self.eps_intervals(q)
        if np.any(eps <= 0):
            return el, th, np.inf
        es = -0.5 * EPS0 * self.voltage**2 / self.rho(q)
        return el, th, es

    def energy(self, q):
        return float(sum(self.energy_parts(q)))

    def energy_change(self, q, dq):
        """``F(q + dq) - F(q)`` evaluated from differences to avoid cancellation."""
        qn = q + dq
        d = np.diff(q, axis=0)
        dd = np.diff(dq, axis=0)
        el = self.lval / self.h * (np.einsum("ka,ab,kb->", d, GRAM, dd) + 0.5 * np.einsum("ka,ab,kb->", dd, GRAM, dd))
        m = self.model.material
        qm, dm = unpack(q), unpack(dq)
        t2 = np.einsum("...ij,...ij->...", qm, qm)
        dt2 = 2.0 * np.einsum("...ij,...ij->...", qm, dm) + np.einsum("...ij,...ij->...", dm, dm)
        qd = qm @ dm
        dd2 = dm @ dm
        dt3 = 3.0 * np.einsum("...ii->...", qm @ qd) + 3.0 * np.einsum("...ii->...", qm @ dd2) + np.einsum("...ii->...", dm @ dd2)
        dquart = dt2 * (2.0 * t2 + dt2)
        dth = m.a_coef * dt2 + 2.0 * m.b_coef / 3.0 * dt3 + self.model.quartic_factor * m.c_coef / 2.0 * dquart
        th = float(np.dot(self.w, dth))
        eps_old = self.eps_intervals(q)
        eps_new = self.eps_intervals(qn)
        if np.any(eps_new <= 0):
            return np.inf
        rho_old = self.rho(q)
        drho = np.sum(self.h * (eps_old - eps_new) / (eps_old * eps_new))
        rho_new = rho_old + drho
        es = 0.5 * EPS0 * self.voltage**2 * drho / (rho_old * rho_new)
        return el + th + es

    def field_intervals(self, q):
        """E_z on each LC interval, V/m."""
        return self.voltage / (self.rho(q) * self.eps_intervals(q))

    def gradient(self, q):
        """dF/dq at every node, shape (n, 5)."""
        g = self.w[:, None] * self.model.thermotropic_grad(q)
        d = np.diff(q, axis=0) @ GRAM * (self.lval / self.h)
        g[:-1] -= d
        g[1:] += d
        if self.voltage != 0.0:
            eps = self.eps_intervals(q)
            rho = self.rho(q)
            de = -0.5 * EPS0 * self.voltage**2 / rho**2 * self.h / eps**2
            contrib = -0.5 * self.ce * de
            for c in (0, 3):
                g[:-1, c] += contrib
                g[1:, c] += contrib
        return g

    def hessian(self, q):
        """Dense Hessian over all nodes, shape (5n, 5n)."""
        n = self.n
        hess = np.zeros((n, 5, n, 5))
        idx = np.arange(n)
        hess[idx, :, idx, :] = self.w[:, None, None] * self.model.thermotropic_hess(q)
        kel = self.lval / self.h * GRAM
        deg = np.full(n, 2.0)
        deg[[0, -1]] = 1.0
        hess[idx, :, idx, :] += deg[:, None, None] * kel
        hess[idx[:-1], :, idx[1:], :] -= kel
        hess[idx[1:], :, idx[:-1], :] -= kel
        hess = hess.reshape(5 * n, 5 * n)
        if self.voltage != 0.0:
            eps = self.eps_intervals(q)
            rho = self.rho(q)
            v2 = EPS0 * self.voltage**2
            a = self.h / eps**2
            jac = np.zeros((n - 1, 5 * n))
            k = np.arange(n - 1)
            for c in (0, 3):
                jac[k, 5 * k + c] = -0.5 * self.ce
                jac[k, 5 * (k + 1) + c] = -0.5 * self.ce
            ja = jac.T @ a
            hess -= v2 / rho**3 * np.outer(ja, ja)
            hess += (jac.T * (v2 / rho**2 * self.h / eps**3)) @ jac
        return hess

    def molecular_field(self, q):
        """Projected molecular field ``H`` (tensor components) at every node."""
        return -covector_to_tensor(self.gradient(q)) / self.w[:, None]

    def residual(self, q):
        h = self.molecular_field(q)[self.free]
        return float(np.max(np.abs(h))) / self.force_scale if h.size else 0.0

    def potential(self, q):
        """Potential on LC nodes, bottom electrode at 0 V."""
        rho = self.rho(q)
        drops = self.voltage * (self.h / self.eps_intervals(q)) / rho
        start = self.voltage * 0.5 * self.rho_series / rho
        return start + np.concatenate([[0.0], np.cumsum(drops)])


def _node_coords(stack: CellStack):
    return np.linspace(0.0, stack.lc_thickness, stack.grid_nz)


def initial_state(stack: CellStack, model: LdGModel, voltage: float, perturbation=TILT_PERTURBATION) -> CellState:
    """Uniaxial state along the easy axis at ``S_eq`` with a symmetric tilt bump.

    The easy axis is tilted towards +z by ``perturbation * sin(pi z / d)``.
    """
    z = _node_coords(stack)
    axis = np.asarray(stack.easy_axis)
    theta = perturbation * np.sin(np.pi * z / stack.lc_thickness)
    if perturbation:
        theta[[0, -1]] = 0.0
    inplane = axis - axis[2] * np.array([0.0, 0.0, 1.0])
    norm = np.linalg.norm(inplane)
    if norm < 1e-12:
        inplane = np.array([1.0, 0.0, 0.0])
    else:
        inplane = inplane / norm
    base = np.arcsin(np.clip(axis[2], -1.0, 1.0))
    ang = base + theta
    n = np.cos(ang)[:, None] * inplane + np.sin(ang)[:, None] * np.array([0.0, 0.0, 1.0])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    q = model.uniaxial(n)
    return make_state(stack, model, q, voltage)


def uniform_state(stack: CellStack, model: LdGModel, director, voltage: float = 0.0, order=None) -> CellState:
    """A spatially uniform uniaxial state (e.g. forced homeotropic)."""
    q = np.tile(model.uniaxial(np.asarray(director, dtype=float), order), (stack.grid_nz, 1))
    return make_state(stack, model, q, voltage)


def make_state(stack, model, q, voltage) -> CellState:
    disc = Discrete1D(stack, model, voltage)
    return CellState(
        dimensionality=1,
        q=np.array(q, dtype=float),
        potential=disc.potential(q),
        applied_voltage=float(voltage),
        z=_node_coords(stack),
        energy=disc.energy(q),
        residual=disc.residual(q),
    )


def poisson_solve(state: CellState, stack: CellStack, model: LdGModel):
    """Potential on the LC nodes for the current tensor field (closed form)."""
    return Discrete1D(stack, model, state.applied_voltage).potential(state.q)


def _boundary_q(stack, model):
    return model.uniaxial(np.asarray(stack.easy_axis))


def gradient_flow_step(state: CellState, stack: CellStack, model: LdGModel, dt: float, implicit=True, disc=None):
    """One backtracked gradient-flow step; returns ``(state, energy, dt_used)``.

    ``implicit=False`` is the plain explicit step ``q -= dt M^-1 dF/dq``;
    the default linearises the flow about the current state
    (``(M + dt Hess) dq = -dt dF/dq``), which stays stable at step sizes the
    explicit scheme cannot reach. A step that raises the energy, or whose
    implicit matrix is not positive definite, is retried with ``dt / 2``.
    """
    if not dt > 0:
        raise InputError("dt must be positive")
    disc = disc or Discrete1D(stack, model, state.applied_voltage)
    q = state.q
    if stack.anchoring_mode == "strong":
        q = q.copy()
        q[[0, -1]] = _boundary_q(stack, model)
    free = disc.free
    g_all = disc.gradient(q)
    g = g_all[free].ravel()
    mass = np.kron(np.diag(disc.w[free]), GRAM)
    hess = None
    if implicit:
        sel = (5 * free[:, None] + np.arange(5)).ravel()
        hess = disc.hessian(q)[np.ix_(sel, sel)]
    e_old = state.energy if np.isfinite(state.energy) else disc.energy(q)
    floor = dt * 1e-18
    trial = dt
    while trial >= floor:
        try:
            if implicit:
                step = -linalg.cho_solve(linalg.cho_factor(mass / trial + hess), g)
            else:
                step = -trial * (g.reshape(-1, 5) @ GRAM_INV.T / disc.w[free][:, None]).ravel()
        except linalg.LinAlgError:
            trial *= 0.5
            continue
        dq = np.zeros_like(q)
        dq[free] = retract(q[free], step.reshape(-1, 5)) - q[free]
        de = disc.energy_change(q, dq)
        if de <= 0.0:
            new = state.copy()
            new.q = q + dq
            new.potential = disc.potential(new.q)
            new.energy = e_old + de
            new.energy_history.append(new.energy)
            new.steps += 1
            return new, new.energy, trial
        trial *= 0.5
    raise StagnationError(
        "gradient-flow step stagnated", residual=disc.residual(q), state=state, voltage=state.applied_voltage
    )


def relax(
    stack: CellStack,
    model: LdGModel,
    voltage: float,
    *,
    initial: CellState | None = None,
    tol_q: float = 1e-4,
    tol_energy: float = 1e-10,
    max_steps: int = 500_000,
    dt0: float = 1e-3,
    implicit: bool = True,
    perturbation: float = TILT_PERTURBATION,
) -> CellState:
    """Relax the 1D cell to equilibrium at a fixed applied voltage.

    Convergence needs the max-norm of the molecular field, in units of
    ``L / d^2``, below ``tol_q`` and the relative energy change of the last
    step below ``tol_energy``.
    """
    if voltage < 0:
        raise InputError("voltage must be non-negative")
    if initial is None:
        state = initial_state(stack, model, voltage, perturbation)
    else:
        state = make_state(stack, model, initial.q, voltage)
    disc = Discrete1D(stack, model, voltage)
    if stack.anchoring_mode == "strong":
        state.q[[0, -1]] = _boundary_q(stack, model)
    state.energy = disc.energy(state.q)
    state.energy_history = [state.energy]
    e_floor = disc.lval * model.s_eq**2 / stack.lc_thickness
    dt = dt0
    rel_change = np.inf
    res = disc.residual(state.q)
    for it in range(max_steps):
        if res < tol_q and (it == 0 or rel_change < tol_energy):
            break
        e_prev = state.energy
        state, _, used = gradient_flow_step(state, stack, model, dt, implicit=implicit, disc=disc)
        rel_change = abs(state.energy - e_prev) / max(abs(e_prev), e_floor)
        dt = min(4.0 * used, DT_MAX) if implicit else 1.5 * used
        res = disc.residual(state.q)
    else:
        state.residual = res
        raise SolverError(
            f"relax did not converge in {max_steps} steps at V={voltage} (residual {res:.3g})",
            residual=res,
            state=state,
            voltage=voltage,
        )
    state.residual = res
    state.converged = True
    state.energy = disc.energy(state.q)
    state.potential = disc.potential(state.q)
    log.debug("V=%g converged in %d steps, residual %.3g", voltage, state.steps, res)
    return state


AVERAGING_RULES = ("mean", "series")


def effective_permittivity(state: CellState, stack: CellStack, model: LdGModel, averaging: str = "mean") -> float:
    """Thickness average of ``eps_zz`` over the LC layer.

    ``"mean"`` is the arithmetic average ``(1/d) int eps_zz dz``;
    ``"series"`` is the series-capacitance value ``d / int dz / eps_zz``.
    """
    if averaging not in AVERAGING_RULES:
        raise InputError(f"averaging must be one of {AVERAGING_RULES}")
    disc = Discrete1D(stack, model, state.applied_voltage)
    eps = disc.eps_intervals(state.q)
    if averaging == "series":
        return float(stack.lc_thickness / np.sum(disc.h / eps))
    return float(np.sum(disc.h * eps) / stack.lc_thickness)


def midplane_tilt(state: CellState) -> float:
    q = state.q
    nz = q.shape[-2]
    if nz % 2:
        return float(np.max(tilt_angle(q[..., nz // 2, :])))
    return float(np.max(tilt_angle(0.5 * (q[..., nz // 2 - 1, :] + q[..., nz // 2, :]))))
