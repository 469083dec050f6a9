"""Landau-de Gennes Q-tensor algebra, energy densities and closed-form results.

A Q-tensor is stored as its five independent components
``q = (Q11, Q12, Q13, Q22, Q23)`` with ``Q33 = -Q11 - Q22``; arrays of
tensors have shape ``(..., 5)``. Everything is SI.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, InputError
from .materials import EPS0, LCMaterial

QUARTIC_CONVENTIONS = ("tr_q2_sq", "tr_q4")
ELASTIC_RULES = ("k11", "mean")

# Q = sum_k q_k BASIS[k]
BASIS = np.zeros((5, 3, 3))
BASIS[0, 0, 0], BASIS[0, 2, 2] = 1.0, -1.0
BASIS[1, 0, 1] = BASIS[1, 1, 0] = 1.0
BASIS[2, 0, 2] = BASIS[2, 2, 0] = 1.0
BASIS[3, 1, 1], BASIS[3, 2, 2] = 1.0, -1.0
BASIS[4, 1, 2] = BASIS[4, 2, 1] = 1.0

# Frobenius inner products of the basis: |Q|^2 = q @ GRAM @ q
GRAM = np.einsum("kij,lij->kl", BASIS, BASIS)
GRAM_INV = np.linalg.inv(GRAM)


def pack(mat):
    """Symmetric traceless (..., 3, 3) -> (..., 5)."""
    mat = np.asarray(mat, dtype=float)
    return np.stack(
        [mat[..., 0, 0], mat[..., 0, 1], mat[..., 0, 2], mat[..., 1, 1], mat[..., 1, 2]], axis=-1
    )


def unpack(q):
    """(..., 5) -> symmetric traceless (..., 3, 3)."""
    return np.einsum("...k,kij->...ij", np.asarray(q, dtype=float), BASIS)


def covector_to_tensor(g):
    """Convert d/dq derivatives into the equivalent traceless tensor components.

    If ``g_k = dF/dq_k`` then the returned components are those of the
    symmetric traceless matrix ``G`` with ``G : BASIS[k] = g_k``.
    """
    return np.asarray(g) @ GRAM_INV.T


def uniaxial_q(director, order):
    """Packed ``S (n n - I/3)`` for unit director(s) ``n``."""
    n = np.asarray(director, dtype=float)
    norm = np.linalg.norm(n, axis=-1)
    if np.any(np.abs(norm - 1.0) > 1e-12):
        raise InputError("director must be a unit vector")
    s = np.asarray(order, dtype=float)[..., None, None]
    mat = s * (n[..., :, None] * n[..., None, :] - np.eye(3) / 3.0)
    return pack(mat)


def director_and_order(q):
    """Principal director and scalar order parameter of packed tensor(s).

    ``S = 1.5 * largest eigenvalue``. The director sign is fixed so that the
    first nonzero of its x, z, y components is positive.
    """
    w, v = np.linalg.eigh(unpack(q))
    n = v[..., :, -1]
    ref = np.where(np.abs(n[..., 0]) > 1e-12, n[..., 0], np.where(np.abs(n[..., 2]) > 1e-12, n[..., 2], n[..., 1]))
    n = n * np.where(ref < 0, -1.0, 1.0)[..., None]
    return n, 1.5 * w[..., -1]


def tilt_angle(q):
    """Angle of the principal director out of the x-y plane, radians."""
    n, _ = director_and_order(q)
    return np.arcsin(np.clip(np.abs(n[..., 2]), 0.0, 1.0))


def tr_q2(q):
    q = np.asarray(q, dtype=float)
    return np.einsum("...k,kl,...l->...", q, GRAM, q)


def tr_q3(q):
    m = unpack(q)
    return 3.0 * np.linalg.det(m)


def _quartic_factor(quartic: str) -> float:
    # tr(Q^4) = (tr Q^2)^2 / 2 for traceless symmetric Q
    if quartic == "tr_q2_sq":
        return 1.0
    if quartic == "tr_q4":
        return 0.5
    raise InputError(f"quartic_convention must be one of {QUARTIC_CONVENTIONS}")


def thermotropic_of_order(s, material: LCMaterial, quartic: str = "tr_q2_sq"):
    """Bulk energy density of a uniaxial state as a function of ``S``."""
    s = np.asarray(s, dtype=float)
    t2 = 2.0 * s**2 / 3.0
    t3 = 2.0 * s**3 / 9.0
    cf = _quartic_factor(quartic)
    return material.a_coef * t2 + 2.0 * material.b_coef / 3.0 * t3 + cf * material.c_coef / 2.0 * t2**2


def equilibrium_order(material: LCMaterial, quartic: str = "tr_q2_sq") -> float:
    """Nonzero minimiser of the uniaxial thermotropic energy."""
    a, b, c = material.a_coef, material.b_coef, material.c_coef
    if not c > 0:
        raise DomainError("c_coef must be positive")
    # dF/dS = (4S/9) (3A + B S + 2 cf C S^2)
    cf = _quartic_factor(quartic)
    disc = b * b - 24.0 * cf * a * c
    if disc < 0:
        raise DomainError("no nematic minimum: negative discriminant")
    return (-b + np.sqrt(disc)) / (4.0 * cf * c)


def freedericksz_threshold(material: LCMaterial) -> float:
    """Splay Freedericksz threshold voltage ``pi sqrt(K11 / (eps0 deps))``."""
    if not material.delta_eps > 0:
        raise DomainError("threshold requires positive dielectric anisotropy")
    return float(np.pi * np.sqrt(material.k11 / (EPS0 * material.delta_eps)))


@dataclass(frozen=True)
class LdGModel:
    """A material together with the modelling conventions used to simulate it.

    ``quartic`` picks the quartic thermotropic normalisation, ``elastic_rule``
    how the one-constant ``L`` is obtained (``"k11"``: ``K11 / (2 S_eq^2)``,
    ``"mean"``: the same with ``(K11+K22+K33)/3``), and ``s_ref`` the order at
    which ``delta_eps`` applies (default: ``S_eq``).
    """

    material: LCMaterial
    quartic: str = "tr_q2_sq"
    elastic_rule: str = "k11"
    s_ref: float | None = None

    def __post_init__(self):
        _quartic_factor(self.quartic)
        if self.elastic_rule not in ELASTIC_RULES:
            raise InputError(f"elastic_rule must be one of {ELASTIC_RULES}")
        if self.s_ref is not None and not self.s_ref > 0:
            raise InputError("s_ref must be positive")

    @cached_property
    def s_eq(self) -> float:
        return equilibrium_order(self.material, self.quartic)

    @property
    def s_dielectric(self) -> float:
        return self.s_eq if self.s_ref is None else self.s_ref

    @cached_property
    def elastic_l(self) -> float:
        m = self.material
        k = m.k11 if self.elastic_rule == "k11" else (m.k11 + m.k22 + m.k33) / 3.0
        return k / (2.0 * self.s_eq**2)

    @property
    def quartic_factor(self) -> float:
        return _quartic_factor(self.quartic)

    # bulk thermotropic energy -------------------------------------------------

    def thermotropic(self, q):
        m = self.material
        t2 = tr_q2(q)
        return m.a_coef * t2 + 2.0 * m.b_coef / 3.0 * tr_q3(q) + self.quartic_factor * m.c_coef / 2.0 * t2**2

    def _matrix_gradient(self, qm):
        # dF/dQ treating the matrix entries as independent
        m = self.material
        t2 = np.einsum("...ij,...ij->...", qm, qm)
        q2 = qm @ qm
        return (
            2.0 * m.a_coef * qm
            + 2.0 * m.b_coef * q2
            + 2.0 * self.quartic_factor * m.c_coef * t2[..., None, None] * qm
        )

    def thermotropic_grad(self, q):
        """dF_th/dq, shape (..., 5)."""
        g = self._matrix_gradient(unpack(q))
        return np.einsum("...ij,kij->...k", g, BASIS)

    def thermotropic_hess(self, q):
        """d2F_th/dq dq, shape (..., 5, 5)."""
        m = self.material
        qm = unpack(q)
        t2 = np.einsum("...ij,...ij->...", qm, qm)[..., None, None, None]
        qe = np.einsum("...ij,ljk->...lik", qm, BASIS)  # Q E_l
        eq = np.einsum("lij,...jk->...lik", BASIS, qm)  # E_l Q
        tr_qe = np.einsum("...ij,lij->...l", qm, BASIS)[..., None, None]
        cf = self.quartic_factor
        dg = (
            2.0 * m.a_coef * BASIS
            + 2.0 * m.b_coef * (qe + eq)
            + 2.0 * cf * m.c_coef * (2.0 * tr_qe * qm[..., None, :, :] + t2 * BASIS)
        )
        return np.einsum("...lij,kij->...kl", dg, BASIS)

    # dielectric --------------------------------------------------------------

    def dielectric_tensor(self, q):
        return dielectric_tensor(q, self.material, self.s_dielectric)

    def eps_zz(self, q):
        q = np.asarray(q, dtype=float)
        return self.material.eps_mean - self.material.delta_eps / self.s_dielectric * (q[..., 0] + q[..., 3])

    def uniaxial(self, director, order=None):
        return uniaxial_q(director, self.s_eq if order is None else order)


def dielectric_tensor(q, material: LCMaterial, s_ref: float):
    """Relative permittivity ``(deps / s_ref) Q + eps_mean I``."""
    if not s_ref > 0:
        raise InputError("s_ref must be positive")
    return material.delta_eps / s_ref * unpack(q) + material.eps_mean * np.eye(3)


def energy_densities(q, grad_q, grad_u, model: LdGModel):
    """Elastic, thermotropic and electrostatic energy densities (J/m^3).

    ``grad_q`` has shape (..., 3, 5) (spatial index first), ``grad_u`` (..., 3).
    """
    grad_q = np.asarray(grad_q, dtype=float)
    grad_u = np.asarray(grad_u, dtype=float)
    elastic = 0.5 * model.elastic_l * np.einsum("...ak,kl,...al->...", grad_q, GRAM, grad_q)
    thermo = model.thermotropic(q)
    eps = model.dielectric_tensor(q)
    electro = -0.5 * EPS0 * np.einsum("...i,...ij,...j->...", grad_u, eps, grad_u)
    return elastic, thermo, electro


def molecular_field(stencil, grad_u, model: LdGModel, spacing):
    """Projected molecular field ``H = -[dF/dQ]`` at the centre of a stencil.

    ``stencil`` is ``(3, 5)`` (neighbours along one axis) or ``(3, 3, 5)``
    (a 2D block, five-point Laplacian). ``spacing`` is a scalar or one value
    per axis. Returns the five packed components of the symmetric traceless
    ``H = L lap(Q) - [dF_th/dQ]^st + eps0 deps/(2 s_ref) [E E]^st``.
    """
    st = np.asarray(stencil, dtype=float)
    ndim = st.ndim - 1
    h = np.broadcast_to(np.asarray(spacing, dtype=float), (ndim,))
    if ndim == 1:
        centre = st[1]
        lap = (st[0] - 2.0 * st[1] + st[2]) / h[0] ** 2
    elif ndim == 2:
        centre = st[1, 1]
        lap = (st[0, 1] - 2.0 * centre + st[2, 1]) / h[0] ** 2 + (st[1, 0] - 2.0 * centre + st[1, 2]) / h[1] ** 2
    else:
        raise InputError("stencil must be (3, 5) or (3, 3, 5)")
    e = np.asarray(grad_u, dtype=float)
    ee = np.outer(e, e)
    ee -= np.trace(ee) / 3.0 * np.eye(3)
    drive = 0.5 * EPS0 * model.material.delta_eps / model.s_dielectric * pack(ee)
    thermo = covector_to_tensor(model.thermotropic_grad(centre))
    return model.elastic_l * lap - thermo + drive


def _rodrigues(omega):
    """exp of skew matrices (..., 3, 3)."""
    w = np.stack([omega[..., 2, 1], omega[..., 0, 2], omega[..., 1, 0]], axis=-1)
    theta = np.linalg.norm(w, axis=-1)[..., None, None]
    small = theta < 1e-8
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    return np.eye(3) + a * omega + b * (omega @ omega)


def retract(q, dq, gap_fraction=0.1):
    """Apply a step ``dq`` with its rotational part taken as an exact rotation.

    The part of ``dQ`` that only turns the eigenframe of ``Q`` (commutator
    with a skew generator, for eigenvalue pairs separated by more than
    ``gap_fraction`` of the spread) is applied as ``R Q R^T``; the rest is
    added to the eigenvalues. To first order this equals ``q + dq``, but a
    finite rotation no longer shrinks the order parameter.
    """
    qm = unpack(q)
    dm = unpack(dq)
    lam, v = np.linalg.eigh(qm)
    p = np.swapaxes(v, -1, -2) @ dm @ v
    gap = lam[..., None, :] - lam[..., :, None]  # lam_j - lam_i
    spread = (lam[..., -1] - lam[..., 0])[..., None, None]
    rot = np.abs(gap) > gap_fraction * spread
    rot &= spread > 1e-12
    omega = np.where(rot, p / np.where(rot, gap, 1.0), 0.0)
    mag = np.where(rot, 0.0, p)
    inner = lam[..., :, None] * np.eye(3) + mag
    r = _rodrigues(omega)
    rv = v @ r
    new = rv @ inner @ np.swapaxes(rv, -1, -2)
    new = 0.5 * (new + np.swapaxes(new, -1, -2))
    return pack(new)
