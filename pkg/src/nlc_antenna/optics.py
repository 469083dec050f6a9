"""Berreman 4x4 transfer-matrix optics of stratified anisotropic media.

Field vectors are ``(Ex, Hy, Ey, -Hx)`` with H scaled by the vacuum
impedance, so ``d psi / dz = i k0 D psi`` with ``D`` from
:func:`berreman_matrix`. Light travels along +z; ``eta`` is the conserved
in-plane wavevector component along x in units of ``k0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DomainError, SingularLayerError
from .qtensor import unpack

COND_LIMIT = 1e8


@dataclass(frozen=True)
class OpticalLayer:
    thickness: float
    permittivity: np.ndarray

    def __post_init__(self):
        eps = np.asarray(self.permittivity, dtype=complex)
        if eps.shape != (3, 3):
            raise ValueError("permittivity must be 3x3")
        if not np.allclose(eps, eps.T, rtol=0, atol=1e-12 * max(1.0, np.abs(eps).max())):
            raise ValueError("permittivity must be symmetric")
        if self.thickness < 0:
            raise ValueError("thickness must be non-negative")
        object.__setattr__(self, "permittivity", eps)

    @classmethod
    def isotropic(cls, thickness, index):
        return cls(thickness, np.eye(3) * complex(index) ** 2)


@dataclass(frozen=True)
class PlaneWaveSpec:
    wavelength: float = 532e-9
    eta: float = 0.0
    ambient_index_in: float = 1.0
    ambient_index_out: float = 1.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if abs(self.eta) >= min(self.ambient_index_in, self.ambient_index_out):
            raise DomainError("evanescent ambient mode: |eta| must be below both ambient indices")


def berreman_matrix(eps, eta=0.0):
    """The 4x4 Berreman matrix for permittivity tensor(s) ``eps`` (..., 3, 3)."""
    e = np.asarray(eps, dtype=complex)
    e33 = e[..., 2, 2]
    if np.any(e33 == 0):
        raise SingularLayerError("eps_33 = 0 makes the Berreman matrix singular")
    d = np.zeros(e.shape[:-2] + (4, 4), dtype=complex)
    d[..., 0, 0] = -eta * e[..., 2, 0] / e33
    d[..., 0, 1] = 1.0 - eta**2 / e33
    d[..., 0, 2] = -eta * e[..., 2, 1] / e33
    d[..., 1, 0] = e[..., 0, 0] - e[..., 0, 2] * e[..., 2, 0] / e33
    d[..., 1, 1] = -eta * e[..., 0, 2] / e33
    d[..., 1, 2] = e[..., 0, 1] - e[..., 0, 2] * e[..., 2, 1] / e33
    d[..., 2, 3] = 1.0
    d[..., 3, 0] = e[..., 1, 0] - e[..., 1, 2] * e[..., 2, 0] / e33
    d[..., 3, 1] = -eta * e[..., 1, 2] / e33
    d[..., 3, 2] = e[..., 1, 1] - e[..., 1, 2] * e[..., 2, 1] / e33 - eta**2
    return d


def layer_propagator(d_matrix, thickness, wavelength):
    """``exp(i k0 D h)``.

    Batched over leading axes of ``d_matrix``/``thickness``; ``wavelength``
    may be an array, which adds a leading wavelength axis to the result.
    Eigendecomposition is used unless the eigenvector matrix has condition
    number above ``COND_LIMIT``, in which case :func:`scipy.linalg.expm` is
    used for that layer.
    """
    d = np.asarray(d_matrix, dtype=complex)
    h = np.broadcast_to(np.asarray(thickness, dtype=float), d.shape[:-2])
    lam = np.atleast_1d(np.asarray(wavelength, dtype=float))
    k0 = 2.0 * np.pi / lam
    w, v = np.linalg.eig(d)
    cond = np.linalg.cond(v)
    bad = ~np.isfinite(cond) | (cond > COND_LIMIT)
    vinv = np.linalg.inv(np.where(bad[..., None, None], np.eye(4), v))
    phase = np.exp(1j * k0.reshape((-1,) + (1,) * (w.ndim)) * (h[..., None] * w))
    out = np.einsum("...ij,w...j,...jk->w...ik", v, phase, vinv)
    if np.any(bad):
        for idx in np.ndindex(bad.shape):
            if not bad[idx]:
                continue
            for wi, kk in enumerate(k0):
                out[(wi,) + idx] = linalg.expm(1j * kk * h[idx] * d[idx])
    if np.ndim(wavelength) == 0:
        out = out[0]
    return out


def _ambient_modes(n, eta):
    """Columns: forward p, forward s, backward p, backward s (unit E)."""
    q = np.sqrt(complex(n) ** 2 - eta**2)
    c = q / n
    f = np.zeros((4, 4), dtype=complex)
    f[:, 0] = [c, n, 0, 0]
    f[:, 1] = [0, 0, 1, q]
    f[:, 2] = [-c, n, 0, 0]
    f[:, 3] = [0, 0, 1, -q]
    return f, q


def stack_matrix(layers, wavelength, eta=0.0):
    """Total transfer matrix mapping the field at the entrance to the exit."""
    lam = np.atleast_1d(np.asarray(wavelength, dtype=float))
    total = np.broadcast_to(np.eye(4, dtype=complex), (lam.size, 4, 4)).copy()
    if layers:
        eps = np.stack([layer.permittivity for layer in layers])
        h = np.array([layer.thickness for layer in layers])
        props = layer_propagator(berreman_matrix(eps, eta), h, lam)  # (w, n, 4, 4)
        for j in range(len(layers)):
            total = props[:, j] @ total
    return total if np.ndim(wavelength) else total[0]


def _solve_system(m, wave: PlaneWaveSpec, jones_in):
    fin, qin = _ambient_modes(wave.ambient_index_in, wave.eta)
    fout, qout = _ambient_modes(wave.ambient_index_out, wave.eta)
    s = np.linalg.solve(fout, m @ fin)
    a = np.asarray(jones_in, dtype=complex)
    # [t, 0] = S [a, r]
    r = -np.linalg.solve(s[..., 2:, 2:], (s[..., 2:, :2] @ a[..., None]))[..., 0]
    t = (s[..., :2, :2] @ a[..., None])[..., 0] + (s[..., :2, 2:] @ r[..., None])[..., 0]
    return t, r, qin, qout


def _powers(t, r, a, qin, qout):
    # z-flux of a unit-E ambient mode is Re(q)/2 for both p and s
    a = np.asarray(a, dtype=complex)
    incident = np.real(qin) * np.sum(np.abs(a) ** 2)
    trans = np.real(qout) * np.sum(np.abs(t) ** 2, axis=-1)
    refl = np.real(qin) * np.sum(np.abs(r) ** 2, axis=-1)
    return trans / incident, refl / incident


def transmittance(layers, wave: PlaneWaveSpec = PlaneWaveSpec(), polarization=(1.0, 0.0), analyzer=None):
    """Power transmittance, reflectance and output Jones amplitudes.

    ``polarization`` is the incident Jones vector in the (p, s) basis, which
    at normal incidence is (x, y). ``analyzer`` (a Jones vector) projects the
    transmitted field onto an ideal polariser before the power is counted.
    """
    pol = np.asarray(polarization, dtype=complex)
    pol = pol / np.linalg.norm(pol)
    m = stack_matrix(list(layers), wave.wavelength, wave.eta)
    t, r, qin, qout = _solve_system(m, wave, pol)
    if analyzer is not None:
        an = np.asarray(analyzer, dtype=complex)
        an = an / np.linalg.norm(an)
        t = np.vdot(an, t) * an
    tt, rr = _powers(t, r, pol, qin, qout)
    return float(tt), float(rr), t


def column_transmittance(eps_layers, thickness, wavelengths, wave: PlaneWaveSpec, polarizations=((1, 0), (0, 1))):
    """Vectorised transmittance for many columns and wavelengths.

    ``eps_layers`` is (ncol, nlayer, 3, 3) and ``thickness`` (ncol, nlayer)
    or (nlayer,). Returns ``T``, ``R`` of shape (ncol, nwave), averaged over
    the given input polarisations (the default averages x and y, i.e.
    unpolarised light).
    """
    eps = np.asarray(eps_layers, dtype=complex)
    ncol, nlay = eps.shape[:2]
    lam = np.atleast_1d(np.asarray(wavelengths, dtype=float))
    h = np.broadcast_to(np.asarray(thickness, dtype=float), (ncol, nlay))
    props = layer_propagator(berreman_matrix(eps, wave.eta), h, lam)  # (w, col, lay, 4, 4)
    total = np.broadcast_to(np.eye(4, dtype=complex), (lam.size, ncol, 4, 4)).copy()
    for j in range(nlay):
        total = props[:, :, j] @ total
    tsum = np.zeros((ncol, lam.size))
    rsum = np.zeros((ncol, lam.size))
    for pol in polarizations:
        p = np.asarray(pol, dtype=complex)
        p = p / np.linalg.norm(p)
        t, r, qin, qout = _solve_system(np.swapaxes(total, 0, 1), wave, p)
        tt, rr = _powers(t, r, p, qin, qout)
        tsum += tt
        rsum += rr
    return tsum / len(polarizations), rsum / len(polarizations)


def optical_tensor(q, material, s_ref):
    """Optical permittivity of packed Q-tensor(s) from ``n_o`` and ``n_e``."""
    eps_perp = material.n_o**2
    eps_par = material.n_e**2
    mean = (2.0 * eps_perp + eps_par) / 3.0
    return (eps_par - eps_perp) / s_ref * unpack(q) + mean * np.eye(3)


def lc_column_to_stack(directors, orders, layer_thickness, material, s_ref):
    """One :class:`OpticalLayer` per (director, order) pair."""
    from .qtensor import uniaxial_q

    q = uniaxial_q(np.asarray(directors, dtype=float), np.asarray(orders, dtype=float))
    eps = optical_tensor(q, material, s_ref)
    return [OpticalLayer(layer_thickness, e) for e in eps]
