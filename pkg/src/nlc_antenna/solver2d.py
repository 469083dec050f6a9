"""Equilibrium of a cell with striped electrodes (variation in x and z).

One electrode period is simulated with periodic x. The z mesh spans the LC
and the cover dielectric layers; the outer faces of the covers are
insulating (natural boundary). Fields are P1 finite elements on a
rectangular grid, each rectangle split both ways into triangles with weight
one half, which keeps the discrete operators mirror-symmetric.

The tensor field lives on the LC nodes, the potential on all nodes. A step
solves the linearised saddle system in ``(dq, dU)`` at once, so the field
response to a change of ``Q`` enters the step exactly, then re-solves the
potential for the updated ``Q`` and accepts the step only if the reduced
(constant-voltage) energy did not rise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from . import solver1d
from .cell import CellStack, CellState
from .errors import InputError, SolverError, StagnationError
from .materials import EPS0
from .optics import PlaneWaveSpec, column_transmittance, optical_tensor
from .qtensor import GRAM, GRAM_INV, LdGModel, director_and_order, retract, tilt_angle, unpack

log = logging.getLogger(__name__)

POISSON_TOL = 1e-8
DT_MAX = 1e12

# d eps2 / d q_c for c = 0, 2, 3 (in units of the dielectric coupling)
_DEPS = {
    0: np.array([[1.0, 0.0], [0.0, -1.0]]),
    2: np.array([[0.0, 1.0], [1.0, 0.0]]),
    3: np.array([[0.0, 0.0], [0.0, -1.0]]),
}


def _cover_nodes(layers, dz_lc):
    """Node offsets (m, increasing away from the LC) and per-element eps."""
    offs = [0.0]
    eps = []
    for t, e in layers:
        n = max(2, int(round(t / (2.0 * dz_lc))))
        step = t / n
        offs.extend(offs[-1] + step * np.arange(1, n + 1))
        eps.extend([e] * n)
    return np.array(offs), np.array(eps)


class Mesh2D:
    """Grid, triangles and fixed operators for one electrode period."""

    def __init__(self, stack: CellStack):
        self.stack = stack
        nx, nz = stack.grid_nx, stack.grid_nz
        d = stack.lc_thickness
        self.nx, self.nz = nx, nz
        self.period = stack.period
        self.dx = self.period / nx
        self.x = np.arange(nx) * self.dx
        cov, cov_eps = _cover_nodes(stack.dielectric_layers, stack.dz)
        z_lc = np.linspace(0.0, d, nz)
        self.z_all = np.concatenate([-cov[::-1], z_lc[1:-1], d + cov])
        self.j0 = cov.size - 1  # z index of the bottom LC surface
        self.j1 = self.j0 + nz - 1
        self.nzt = self.z_all.size
        # per z-cell permittivity; nan marks LC cells
        self.cell_eps = np.concatenate([cov_eps[::-1], np.full(nz - 1, np.nan), cov_eps])
        self.n_nodes = nx * self.nzt
        self._build_triangles()
        self._build_dirichlet()
        self._build_lc_operators()

    def gid(self, i, j):
        return (i % self.nx) * self.nzt + j

    def lid(self, i, j):
        return (i % self.nx) * self.nz + (j - self.j0)

    def _build_triangles(self):
        nx, nzt = self.nx, self.nzt
        ii, jj = np.meshgrid(np.arange(nx), np.arange(nzt - 1), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        hz = np.diff(self.z_all)[jj]
        # corners: a (0,0), b (dx,0), c (0,hz), d (dx,hz)
        corner_id = np.stack([self.gid(ii, jj), self.gid(ii + 1, jj), self.gid(ii, jj + 1), self.gid(ii + 1, jj + 1)], 1)
        xs = np.array([0.0, 1.0, 0.0, 1.0])
        zs = np.array([0.0, 0.0, 1.0, 1.0])
        local = [(0, 1, 3), (0, 3, 2), (0, 1, 2), (1, 3, 2)]
        tri, grads, areas, cells = [], [], [], []
        for loc in local:
            loc = np.array(loc)
            px = xs[loc][None, :] * self.dx * np.ones_like(hz)[:, None]
            pz = zs[loc][None, :] * hz[:, None]
            m = np.stack([np.ones_like(px), px, pz], axis=-1)  # (nc, 3, 3)
            inv = np.linalg.inv(m)
            grads.append(np.stack([inv[:, 1, :], inv[:, 2, :]], axis=-1))  # (nc, 3 nodes, 2)
            areas.append(0.25 * self.dx * hz)  # half area times weight 1/2
            tri.append(corner_id[:, loc])
            cells.append(jj)
        self.tri = np.concatenate(tri)
        self.grad = np.concatenate(grads)
        self.area = np.concatenate(areas)
        self.tri_cell = np.concatenate(cells)
        self.is_lc = np.isnan(self.cell_eps[self.tri_cell])
        self.tri_eps = self.cell_eps[self.tri_cell]
        g = self.grad
        a = self.area[:, None, None]
        self.e_xx = a * g[:, :, None, 0] * g[:, None, :, 0]
        self.e_zz = a * g[:, :, None, 1] * g[:, None, :, 1]
        self.e_xz = a * (g[:, :, None, 0] * g[:, None, :, 1] + g[:, :, None, 1] * g[:, None, :, 0])
        self.rows = np.repeat(self.tri, 3, axis=1).ravel()
        self.cols = np.tile(self.tri, (1, 3)).ravel()

    def _finger_mask(self, centre):
        st = self.stack
        if st.electrode_pattern == "plate":
            return np.ones(self.nx, dtype=bool)
        dist = np.abs((self.x - centre + 0.5 * self.period) % self.period - 0.5 * self.period)
        mask = dist <= 0.5 * st.electrode_width * (1 + 1e-9)
        if not mask.any():
            mask[np.argmin(dist)] = True
        return mask

    def _build_dirichlet(self):
        st = self.stack
        centre = 0.5 * self.period
        self.bottom_fingers = self._finger_mask(centre)
        self.top_fingers = self._finger_mask(centre + st.electrode_offset)
        if st.dielectric_position == "inside":
            jb, jt = 0, self.nzt - 1
        else:
            jb, jt = self.j0, self.j1
        self.j_bottom_el, self.j_top_el = jb, jt
        i = np.arange(self.nx)
        self.bottom_nodes = self.gid(i[self.bottom_fingers], jb)
        self.top_nodes = self.gid(i[self.top_fingers], jt)
        fixed = np.zeros(self.n_nodes, dtype=bool)
        fixed[self.bottom_nodes] = True
        fixed[self.top_nodes] = True
        self.u_fixed = fixed
        self.u_free = np.nonzero(~fixed)[0]

    def _build_lc_operators(self):
        lc = self.is_lc
        tri = self.tri[lc]
        ii = tri // self.nzt
        jj = tri % self.nzt
        self.lc_tri = self.lid(ii, jj)  # (nlc_tri, 3) in LC numbering
        self.lc_area = self.area[lc]
        self.lc_grad = self.grad[lc]
        self.n_lc = self.nx * self.nz
        g = self.lc_grad
        kel = self.lc_area[:, None, None] * np.einsum("tad,tbd->tab", g, g)
        r = np.repeat(self.lc_tri, 3, axis=1).ravel()
        c = np.tile(self.lc_tri, (1, 3)).ravel()
        self.k_lap = sparse.csr_matrix((kel.ravel(), (r, c)), shape=(self.n_lc, self.n_lc))
        self.w_node = np.bincount(self.lc_tri.ravel(), weights=np.repeat(self.lc_area / 3.0, 3), minlength=self.n_lc)
        self.lc_global = self.gid(np.repeat(np.arange(self.nx), self.nz), np.tile(np.arange(self.nz), self.nx) + self.j0)
        self.lc_tri_global = self.tri[lc]


class Discrete2D:
    def __init__(self, mesh: Mesh2D, model: LdGModel, voltage: float, poisson_method: str = "direct"):
        if poisson_method not in ("direct", "sor"):
            raise InputError("poisson_method must be 'direct' or 'sor'")
        self.mesh = mesh
        self.model = model
        self.voltage = float(voltage)
        self.poisson_method = poisson_method
        self.lval = model.elastic_l
        self.ce = model.material.delta_eps / model.s_dielectric
        stack = mesh.stack
        nz = mesh.nz
        jl = np.tile(np.arange(nz), mesh.nx)
        if stack.anchoring_mode == "strong":
            self.free = np.nonzero((jl > 0) & (jl < nz - 1))[0]
        else:
            self.free = np.arange(mesh.n_lc)
        self.force_scale = self.lval / stack.lc_thickness**2
        self.f_bulk = float(model.thermotropic(model.uniaxial(np.array([1.0, 0.0, 0.0]))))
        self.u_bc = np.zeros(mesh.n_nodes)
        self.u_bc[mesh.top_nodes] = self.voltage

    # permittivity -------------------------------------------------------------

    def tri_eps2(self, q):
        """(eps_xx, eps_xz, eps_zz) per triangle."""
        m = self.mesh
        exx = m.tri_eps.copy()
        exz = np.zeros_like(exx)
        ezz = m.tri_eps.copy()
        qt = q[m.lc_tri].mean(axis=1)
        mean = self.model.material.eps_mean
        exx[m.is_lc] = mean + self.ce * qt[:, 0]
        exz[m.is_lc] = self.ce * qt[:, 2]
        ezz[m.is_lc] = mean - self.ce * (qt[:, 0] + qt[:, 3])
        return exx, exz, ezz

    def stiffness(self, eps2):
        m = self.mesh
        exx, exz, ezz = eps2
        data = exx[:, None, None] * m.e_xx + exz[:, None, None] * m.e_xz + ezz[:, None, None] * m.e_zz
        return sparse.csr_matrix((data.ravel(), (m.rows, m.cols)), shape=(m.n_nodes, m.n_nodes))

    # potential ---------------------------------------------------------------

    def solve_potential(self, q, guess=None):
        k = self.stiffness(self.tri_eps2(q))
        m = self.mesh
        f = m.u_free
        kff = k[f][:, f].tocsc()
        rhs = -(k[f] @ self.u_bc)
        if self.poisson_method == "direct":
            uf = splinalg.splu(kff).solve(rhs)
        else:
            start = None if guess is None else guess[f]
            uf = sor_solve(kff, rhs, self._colours(), start)
        res = np.linalg.norm(kff @ uf - rhs) / max(np.linalg.norm(rhs), 1e-300)
        if res > POISSON_TOL and np.linalg.norm(rhs) > 0:
            raise SolverError(f"Poisson residual {res:.3g} above {POISSON_TOL}", residual=res, voltage=self.voltage)
        u = self.u_bc.copy()
        u[f] = uf
        return u, k

    def _colours(self):
        m = self.mesh
        if m.nx % 2:
            raise InputError("SOR colouring needs an even grid_nx")
        nodes = m.u_free
        i, j = nodes // m.nzt, nodes % m.nzt
        return (i % 2) * 2 + (j % 2)

    # energy ------------------------------------------------------------------

    def elastic(self, q):
        return 0.5 * self.lval * float(np.einsum("na,ab,nb->", q, GRAM, self.mesh.k_lap @ q))

    def thermo(self, q):
        return float(np.dot(self.mesh.w_node, self.model.thermotropic(q) - self.f_bulk))

    def electro(self, u, k):
        return -0.5 * EPS0 * float(u @ (k @ u))

    def energy(self, q, u=None, k=None):
        if u is None:
            u, k = self.solve_potential(q)
        return self.elastic(q) + self.thermo(q) + self.electro(u, k)

    def energy_change(self, q, dq, u, u_new, k_new):
        """Reduced-energy difference from small quantities only."""
        m = self.mesh
        el = self.lval * float(np.einsum("na,ab,nb->", dq, GRAM, m.k_lap @ (q + 0.5 * dq)))
        th = float(np.dot(m.w_node, _thermo_difference(self.model, q, dq)))
        # Dirichlet energy identity: E(K') - E(K) = u.dK.u - du.K'.du
        dk = _delta_stiffness(self, dq)
        du = u_new - u
        de = float(u @ (dk @ u)) - float(du @ (k_new @ du))
        return el + th - 0.5 * EPS0 * de

    # derivatives ------------------------------------------------------------

    def tri_field(self, u):
        m = self.mesh
        return np.einsum("tk,tkd->td", u[m.lc_tri_global], m.lc_grad)

    def gradient(self, q, u):
        m = self.mesh
        g = m.w_node[:, None] * self.model.thermotropic_grad(q)
        g += self.lval * (m.k_lap @ q) @ GRAM
        e = self.tri_field(u)
        coef = -0.5 * EPS0 * self.ce * m.lc_area / 3.0
        for c, dmat in _DEPS.items():
            s = coef * np.einsum("td,de,te->t", e, dmat, e)
            g[:, c] += np.bincount(m.lc_tri.ravel(), weights=np.repeat(s, 3), minlength=m.n_lc)
        return g

    def molecular_field(self, q, u):
        g = self.gradient(q, u)
        return -(g @ GRAM_INV.T) / self.mesh.w_node[:, None]

    def residual(self, q, u):
        h = self.molecular_field(q, u)[self.free]
        return float(np.max(np.abs(h))) / self.force_scale if h.size else 0.0

    def coupling(self, u):
        """d2F / dq dU as a sparse (5 n_lc, n_nodes) matrix."""
        m = self.mesh
        e = self.tri_field(u)
        coef = -EPS0 * self.ce * m.lc_area / 3.0
        rows, cols, vals = [], [], []
        for c, dmat in _DEPS.items():
            de = e @ dmat  # (t, 2)
            gb = np.einsum("tbd,td->tb", m.lc_grad, de) * coef[:, None]  # (t, 3 U nodes)
            for a in range(3):
                rows.append(np.repeat(5 * m.lc_tri[:, a] + c, 3))
                cols.append(m.lc_tri_global.ravel())
                vals.append(gb.ravel())
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(5 * m.n_lc, m.n_nodes)
        )

    def q_hessian(self, q):
        m = self.mesh
        el = sparse.kron(m.k_lap, self.lval * GRAM, format="csr")
        th = self.model.thermotropic_hess(q) * m.w_node[:, None, None]
        return el + sparse.block_diag(list(th), format="csr")


def _thermo_difference(model, q, dq):
    mat = model.material
    qm, dm = unpack(q), unpack(dq)
    t2 = np.einsum("...ij,...ij->...", qm, qm)
    dt2 = 2.0 * np.einsum("...ij,...ij->...", qm, dm) + np.einsum("...ij,...ij->...", dm, dm)
    dd2 = dm @ dm
    dt3 = (
        3.0 * np.einsum("...ii->...", qm @ (qm @ dm))
        + 3.0 * np.einsum("...ii->...", qm @ dd2)
        + np.einsum("...ii->...", dm @ dd2)
    )
    return mat.a_coef * dt2 + 2.0 * mat.b_coef / 3.0 * dt3 + model.quartic_factor * mat.c_coef / 2.0 * dt2 * (2.0 * t2 + dt2)


def _delta_stiffness(disc: Discrete2D, dq):
    m = disc.mesh
    z = np.zeros(m.tri.shape[0])
    dqt = dq[m.lc_tri].mean(axis=1)
    dxx, dxz, dzz = z.copy(), z.copy(), z.copy()
    dxx[m.is_lc] = disc.ce * dqt[:, 0]
    dxz[m.is_lc] = disc.ce * dqt[:, 2]
    dzz[m.is_lc] = -disc.ce * (dqt[:, 0] + dqt[:, 3])
    return disc.stiffness((dxx, dxz, dzz))


def sor_solve(a, b, colours, x0=None, omega=None, tol=POISSON_TOL, max_iter=200_000):
    """Multicolour successive over-relaxation for a symmetric M-matrix.

    With a 9-point stencil two colours are not enough (diagonal neighbours
    share a colour), so four colours by (i mod 2, j mod 2) are used; nodes of
    one colour are mutually uncoupled and update together.
    """
    a = sparse.csr_matrix(a)
    diag = a.diagonal()
    x = np.zeros_like(b) if x0 is None else x0.astype(float).copy()
    if omega is None:
        n_side = np.sqrt(a.shape[0])
        omega = 2.0 / (1.0 + np.sin(np.pi / max(n_side, 2.0)))
    groups = [np.nonzero(colours == c)[0] for c in range(4)]
    blocks = [(g, a[g], diag[g]) for g in groups if g.size]
    bnorm = max(np.linalg.norm(b), 1e-300)
    res = np.inf
    for it in range(max_iter):
        for g, rows, dg in blocks:
            r = b[g] - rows @ x
            x[g] += omega * r / dg
        if it % 20 == 0:
            res = np.linalg.norm(a @ x - b) / bnorm
            if res < tol:
                return x
    raise SolverError(f"SOR did not converge (residual {res:.3g})", residual=res)


# states --------------------------------------------------------------------


def _state(mesh, q, u, voltage):
    return CellState(
        dimensionality=2,
        q=q.reshape(mesh.nx, mesh.nz, 5).copy(),
        potential=u.reshape(mesh.nx, mesh.nzt).copy(),
        applied_voltage=float(voltage),
        z=np.linspace(0.0, mesh.stack.lc_thickness, mesh.nz),
        x=mesh.x.copy(),
        z_all=mesh.z_all.copy(),
    )


def initial_state(stack: CellStack, model: LdGModel, voltage: float, from_1d: CellState | None = None, **options):
    """Column-wise copy of a 1D solution (solved here if not given)."""
    mesh = Mesh2D(stack)
    if from_1d is None:
        from_1d = solver1d.relax(stack, model, voltage, **options)
    q = np.tile(from_1d.q, (mesh.nx, 1))
    disc = Discrete2D(mesh, model, voltage)
    u, _ = disc.solve_potential(q)
    st = _state(mesh, q, u, voltage)
    return st


def poisson_solve(state: CellState, stack: CellStack, model: LdGModel, method: str = "direct"):
    mesh = Mesh2D(stack)
    disc = Discrete2D(mesh, model, state.applied_voltage, method)
    u, _ = disc.solve_potential(state.q.reshape(-1, 5), guess=state.potential.ravel())
    return u.reshape(mesh.nx, mesh.nzt)


@dataclass
class _Work:
    q: np.ndarray
    u: np.ndarray
    k: object
    energy: float


def _newton_step(disc: Discrete2D, w: _Work, dt: float):
    """Implicit step via the saddle system; returns (work, dt_used) or raises."""
    m = disc.mesh
    free = disc.free
    qsel = (5 * free[:, None] + np.arange(5)).ravel()
    uf = m.u_free
    g = disc.gradient(w.q, w.u).ravel()[qsel]
    hq = disc.q_hessian(w.q)[qsel][:, qsel]
    mass = sparse.kron(sparse.diags(m.w_node[free]), GRAM, format="csr")
    b = disc.coupling(w.u)[qsel][:, uf]
    kff = w.k[uf][:, uf]
    ru = -EPS0 * (w.k @ w.u)[uf]
    floor = dt * 1e-18
    trial = dt
    while trial >= floor:
        kkt = sparse.bmat([[mass / trial + hq, b], [b.T, -EPS0 * kff]], format="csc")
        try:
            sol = splinalg.splu(kkt, permc_spec="COLAMD").solve(np.concatenate([-g, -ru]))
        except RuntimeError:
            trial *= 0.5
            continue
        step = sol[: qsel.size].reshape(-1, 5)
        if not np.all(np.isfinite(step)) or float(step.ravel() @ g) >= 0.0:
            trial *= 0.5
            continue
        dq = np.zeros_like(w.q)
        dq[free] = retract(w.q[free], step) - w.q[free]
        qn = w.q + dq
        un, kn = disc.solve_potential(qn, guess=w.u)
        de = disc.energy_change(w.q, dq, w.u, un, kn)
        if de <= 0.0:
            return _Work(qn, un, kn, w.energy + de), trial
        trial *= 0.5
    raise StagnationError("2D step stagnated", residual=disc.residual(w.q, w.u), voltage=disc.voltage)


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
    poisson_method: str = "direct",
    **options_1d,
) -> CellState:
    """Relax the 2D cell; the default start is the 1D solution at ``voltage``."""
    if voltage < 0:
        raise InputError("voltage must be non-negative")
    mesh = Mesh2D(stack)
    disc = Discrete2D(mesh, model, voltage, poisson_method)
    if initial is None:
        one = solver1d.relax(stack, model, voltage, **options_1d)
        q = np.tile(one.q, (mesh.nx, 1))
    else:
        q = np.asarray(initial.q, dtype=float).reshape(-1, 5).copy()
    if stack.anchoring_mode == "strong":
        jl = np.tile(np.arange(mesh.nz), mesh.nx)
        q[(jl == 0) | (jl == mesh.nz - 1)] = model.uniaxial(np.asarray(stack.easy_axis))
    u, k = disc.solve_potential(q)
    w = _Work(q, u, k, disc.energy(q, u, k))
    history = [w.energy]
    e_floor = disc.lval * model.s_eq**2 * mesh.period / stack.lc_thickness
    dt = dt0
    rel = np.inf
    res = disc.residual(w.q, w.u)
    steps = 0
    while True:
        if res < tol_q and (steps == 0 or rel < tol_energy):
            break
        if steps >= max_steps:
            st = _state(mesh, w.q, w.u, voltage)
            st.residual, st.energy, st.steps, st.energy_history = res, w.energy, steps, history
            raise SolverError(
                f"2D relax did not converge in {max_steps} steps at V={voltage} (residual {res:.3g})",
                residual=res,
                state=st,
                voltage=voltage,
            )
        e_prev = w.energy
        w, used = _newton_step(disc, w, dt)
        steps += 1
        history.append(w.energy)
        rel = abs(w.energy - e_prev) / max(abs(e_prev), e_floor)
        dt = min(4.0 * used, DT_MAX)
        res = disc.residual(w.q, w.u)
        log.debug("2D step %d: residual %.3g, dt %.3g", steps, res, used)
    st = _state(mesh, w.q, w.u, voltage)
    st.residual = res
    st.energy = w.energy
    st.steps = steps
    st.converged = True
    st.energy_history = history
    return st


def effective_permittivity(state: CellState, stack: CellStack, model: LdGModel, averaging: str = "mean") -> float:
    """LC permittivity of a 2D state.

    ``"mean"``: area average of ``eps_zz`` over the LC. ``"series"``: the
    top-electrode charge per period gives a capacitance ``C``; the LC value
    is the plate-capacitor permittivity that reproduces it once the series
    cover layers are removed.
    """
    mesh = Mesh2D(stack)
    disc = Discrete2D(mesh, model, state.applied_voltage)
    q = state.q.reshape(-1, 5)
    eps2 = disc.tri_eps2(q)
    if averaging == "mean":
        lc = mesh.is_lc
        return float(np.sum(eps2[2][lc] * mesh.area[lc]) / np.sum(mesh.area[lc]))
    if averaging != "series":
        raise InputError("averaging must be 'mean' or 'series'")
    if state.applied_voltage <= 0:
        raise InputError("series averaging needs a nonzero voltage")
    u = state.potential.ravel()
    k = disc.stiffness(eps2)
    charge = EPS0 * float(np.sum((k @ u)[mesh.top_nodes]))
    cap = charge / state.applied_voltage
    rho = EPS0 * mesh.period / cap - stack.inside_resistance()
    return float(stack.lc_thickness / rho)


# optics --------------------------------------------------------------------


@dataclass(frozen=True)
class OpticsSetup:
    """Optical surroundings of the LC for the column-wise transmittance.

    The cover dielectric uses ``cover_index``; electrodes are ``ito_index``
    films of ``ito_thickness`` present only where a finger sits (everywhere
    for plate electrodes; ``ito_thickness=0`` omits them). Results are
    averaged over two orthogonal input polarisations and ``band_samples``
    wavelengths spanning ``bandwidth`` around the centre wavelength.
    """

    ambient_index: float = 1.0
    cover_index: float = 1.70
    ito_index: complex = 1.95 + 0.02j
    ito_thickness: float = 150e-9
    bandwidth: float = 10e-9
    band_samples: int = 101
    lc_layers: int | None = None


def column_layers(q_col, model, setup: OpticsSetup, stack: CellStack, finger_bottom: bool, finger_top: bool, nlayers=None):
    """Permittivities and thicknesses of one optical column (bottom to top)."""
    mat = model.material
    nz = q_col.shape[0]
    z = np.linspace(0.0, stack.lc_thickness, nz)
    if nlayers is None:
        qm = 0.5 * (q_col[1:] + q_col[:-1])
        hl = np.full(nz - 1, stack.lc_thickness / (nz - 1))
    else:
        zc = (np.arange(nlayers) + 0.5) * stack.lc_thickness / nlayers
        qm = np.stack([np.interp(zc, z, q_col[:, c]) for c in range(5)], axis=1)
        hl = np.full(nlayers, stack.lc_thickness / nlayers)
    eps_lc = optical_tensor(qm, mat, model.s_dielectric)
    cover_t = sum(t for t, _ in stack.dielectric_layers)
    eye = np.eye(3, dtype=complex)
    cover = [(cover_t, setup.cover_index**2 * eye)]
    ito = (setup.ito_thickness, complex(setup.ito_index) ** 2 * eye)
    # a missing electrode is a zero-thickness ITO layer so all columns share one shape
    bottom = cover + [ito if finger_bottom else (0.0, ito[1])]
    top = [ito if finger_top else (0.0, ito[1])] + cover
    eps = [e for _, e in bottom] + list(eps_lc) + [e for _, e in top]
    h = [t for t, _ in bottom] + list(hl) + [t for t, _ in top]
    return np.array(eps), np.array(h)


def transmittance_profile_2d(
    state: CellState,
    stack: CellStack,
    model: LdGModel,
    wavelength: float = 532e-9,
    setup: OpticsSetup = OpticsSetup(),
):
    """Column-wise (local-mode) transmittance; returns ``(x, T, R)``."""
    if state.dimensionality == 2:
        q = state.q
    else:
        q = state.q[None]
    mesh_fingers = (np.ones(q.shape[0], bool), np.ones(q.shape[0], bool))
    if state.dimensionality == 2:
        mesh = Mesh2D(stack)
        mesh_fingers = (mesh.bottom_fingers, mesh.top_fingers)
    eps, h = [], []
    for i in range(q.shape[0]):
        e, t = column_layers(q[i], model, setup, stack, mesh_fingers[0][i], mesh_fingers[1][i], setup.lc_layers)
        eps.append(e)
        h.append(t)
    if setup.band_samples > 1:
        lam = wavelength + np.linspace(-0.5, 0.5, setup.band_samples) * setup.bandwidth
    else:
        lam = np.array([wavelength])
    wave = PlaneWaveSpec(wavelength, 0.0, setup.ambient_index, setup.ambient_index)
    t, r = column_transmittance(np.array(eps), np.array(h), lam, wave)
    x = state.x if state.x is not None else np.zeros(1)
    return x, t.mean(axis=1), r.mean(axis=1)


def director_table(state: CellState):
    """Rows of ``(x, z, nx, ny, nz, S)`` for a 2D state."""
    n, s = director_and_order(state.q)
    xx, zz = np.meshgrid(state.x, state.z, indexing="ij")
    return np.column_stack([xx.ravel(), zz.ravel(), n.reshape(-1, 3), s.ravel()])


def midplane_tilt(state: CellState) -> float:
    nz = state.q.shape[1]
    return float(np.max(tilt_angle(state.q[:, nz // 2])))
