"""Independent reference calculations used by the tests.

None of these import the package under test.
"""

import numpy as np
from scipy.optimize import minimize, minimize_scalar

EPS0 = 8.8541878128e-12


def landau_order(a, b, c, quartic_factor=1.0):
    """Nonzero minimiser of a S^2 (2/3) + b S^3 (4/27) + c f S^4 (2/9) by sampling."""

    def f(s):
        t2 = 2.0 * s**2 / 3.0
        t3 = 2.0 * s**3 / 9.0
        return a * t2 + 2.0 * b / 3.0 * t3 + quartic_factor * c / 2.0 * t2**2

    grid = np.linspace(1e-4, 1.0, 200_001)
    s0 = grid[np.argmin(f(grid))]
    res = minimize_scalar(f, bracket=(s0 - 1e-4, s0, s0 + 1e-4), tol=1e-14)
    return res.x, f


def frank_director(voltage, k, eps_perp, delta_eps, d, n=257):
    """One-constant director model across a plate cell, strong planar anchoring.

    Minimises int K/2 theta'^2 dz - eps0 V^2 / (2 int dz / eps(theta)) with
    eps = eps_perp + delta_eps sin^2 theta. Returns (eps_series, eps_mean,
    midplane tilt).
    """
    z = np.linspace(0.0, d, n)
    h = z[1] - z[0]
    scale = 1e-7

    def energy(inner):
        th = np.concatenate([[0.0], inner, [0.0]])
        tm = 0.5 * (th[1:] + th[:-1])
        eps = eps_perp + delta_eps * np.sin(tm) ** 2
        rho = np.sum(h / eps)
        dth = np.diff(th) / h
        e = 0.5 * k * np.sum(dth**2) * h - 0.5 * EPS0 * voltage**2 / rho
        g = np.zeros_like(th)
        g[:-1] -= k * dth
        g[1:] += k * dth
        de = -0.5 * EPS0 * voltage**2 / rho**2 * h / eps**2
        c = de * delta_eps * np.sin(tm) * np.cos(tm)
        g[:-1] += c
        g[1:] += c
        return e / scale, g[1:-1] / scale

    start = 0.5 * np.sin(np.pi * z / d)[1:-1]
    res = minimize(energy, start, jac=True, method="L-BFGS-B", options=dict(maxiter=20000, ftol=1e-15, gtol=1e-12))
    th = np.concatenate([[0.0], res.x, [0.0]])
    tm = 0.5 * (th[1:] + th[:-1])
    eps = eps_perp + delta_eps * np.sin(tm) ** 2
    return d / np.sum(h / eps), float(np.mean(eps)), float(th[n // 2])


def airy_slab(n1, n2, n3, d, lam, theta, pol):
    """Power T and R of an isotropic slab from Fresnel coefficients."""
    s = n1 * np.sin(theta)
    c1, c2, c3 = (np.sqrt(1 - (s / n) ** 2 + 0j) for n in (n1, n2, n3))

    def rt(na, nb, ca, cb):
        if pol == "s":
            den = na * ca + nb * cb
            return (na * ca - nb * cb) / den, 2 * na * ca / den
        den = nb * ca + na * cb
        return (nb * ca - na * cb) / den, 2 * na * ca / den

    r12, t12 = rt(n1, n2, c1, c2)
    r23, t23 = rt(n2, n3, c2, c3)
    beta = 2 * np.pi * n2 * c2 * d / lam
    ph = np.exp(2j * beta)
    t = t12 * t23 * np.exp(1j * beta) / (1 + r12 * r23 * ph)
    r = (r12 + r23 * ph) / (1 + r12 * r23 * ph)
    return float(((n3 * c3).real / (n1 * c1).real) * abs(t) ** 2), float(abs(r) ** 2)


def airy_amplitude(n1, n2, n3, d, lam):
    """Complex normal-incidence transmission amplitude of a slab."""
    r12, t12 = (n1 - n2) / (n1 + n2), 2 * n1 / (n1 + n2)
    r23, t23 = (n2 - n3) / (n2 + n3), 2 * n2 / (n2 + n3)
    beta = 2 * np.pi * n2 * d / lam
    return t12 * t23 * np.exp(1j * beta) / (1 + r12 * r23 * np.exp(2j * beta))


def series_divider(widths, eps, voltage):
    """Interface potentials of planar capacitors in series."""
    drops = np.asarray(widths) / np.asarray(eps)
    return voltage * np.concatenate([[0.0], np.cumsum(drops)]) / drops.sum()
