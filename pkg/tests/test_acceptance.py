"""Acceptance criteria, each at its stated tolerance.

Every test emits one ``criterion N PASS|FAIL: ...`` line before asserting.
The 2D transmittance criterion runs the full 128 x 129 grid (a few minutes).
"""

import time

import numpy as np
import pytest

from nlc_antenna import solver1d, solver2d
from nlc_antenna.antenna import band_coverage, bandwidth_minus10db, calibrate, frequency_from_eps, s11_curve
from nlc_antenna.cell import CellStack
from nlc_antenna.equilibrium import effective_permittivity, freedericksz_curve, locate_threshold
from nlc_antenna.materials import get_material
from nlc_antenna.optics import OpticalLayer, PlaneWaveSpec, lc_column_to_stack, transmittance
from nlc_antenna.qtensor import GRAM_INV, LdGModel, freedericksz_threshold
from oracles import airy_slab

RDP = get_material("RDP-84909")
MODEL = LdGModel(RDP)
STACK = CellStack()
VC = 0.362


def verdict(report, n, ok, detail):
    report(f"criterion {n} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def sweep():
    t0 = time.perf_counter()
    curve = freedericksz_curve(STACK, MODEL, np.linspace(0.0, 3.0, 31), keep_states=True)
    return curve, time.perf_counter() - t0


def test_criterion_01_analytic_threshold(report):
    vc = freedericksz_threshold(RDP)
    verdict(report, 1, abs(vc - 0.362) <= 0.001, f"V_c = {vc:.5f} V (target 0.362 +- 0.001)")


def test_criterion_02_simulated_threshold(report, sweep):
    curve, seconds = sweep
    vt = locate_threshold(curve.voltages, curve.eps)
    err = abs(vt - VC) / VC
    ok = err <= 0.05 and seconds < 60
    verdict(report, 2, ok, f"onset {vt:.4f} V ({100 * err:.1f}% from 0.362 V), 31-point sweep {seconds:.1f} s")


def test_criterion_03_endpoints(report, sweep):
    curve, _ = sweep
    e0 = curve.eps[0]
    homeo = solver1d.uniform_state(STACK, MODEL, np.array([0.0, 0.0, 1.0]))
    e_h = effective_permittivity(homeo, STACK, MODEL)
    ok = abs(e0 - 8.0) <= 0.01 and abs(e_h - 47.1) <= 0.01
    verdict(report, 3, ok, f"eps(0 V) = {e0:.4f}, forced homeotropic eps = {e_h:.4f}")


def test_criterion_04_eps_at_one_volt(report, sweep):
    curve, _ = sweep
    k = int(np.argmin(np.abs(curve.voltages - 1.0)))
    e1 = curve.eps[k]
    ok = abs(curve.voltages[k] - 1.0) < 1e-12 and abs(e1 - 38.4) <= 0.15 * 38.4
    verdict(report, 4, ok, f"eps(1 V) = {e1:.3f} (target 38.4 +- 15%)")


def test_criterion_05_anchors(report):
    m = calibrate()
    f8, f47 = frequency_from_eps(m, 8.0), frequency_from_eps(m, 47.1)
    tun = f8 - f47
    # machine precision: a few units in the last place
    ulps = max(abs(f8 - 4.15e9) / np.spacing(4.15e9), abs(f47 - 3.09e9) / np.spacing(3.09e9))
    ok = ulps <= 4 and abs(tun - 1.06e9) <= 1e6
    verdict(report, 5, ok, f"f(8) = {f8!r} Hz, f(47.1) = {f47!r} Hz ({ulps:.0f} ulp), tunability {tun / 1e6:.4f} MHz")


def test_criterion_06_band_mapping(report):
    m = calibrate()
    f14, f32 = frequency_from_eps(m, 14.0), frequency_from_eps(m, 32.0)
    ok = abs(f14 - 3.8e9) <= 0.05 * 3.8e9 and abs(f32 - 3.3e9) <= 0.05 * 3.3e9
    verdict(report, 6, ok, f"f(14) = {f14 / 1e9:.4f} GHz, f(32) = {f32 / 1e9:.4f} GHz")


def test_criterion_07_tuning_window(report, sweep):
    curve, _ = sweep
    f = frequency_from_eps(calibrate(), curve.eps)
    v_lo, v_hi = band_coverage(curve.voltages, f)
    ok = v_lo is not None and v_hi is not None and 0.35 <= v_lo and v_hi <= 1.0 and v_lo < 0.6 and v_hi > 0.4
    verdict(report, 7, ok, f"3.3-3.8 GHz covered for V in [{v_lo:.4f}, {v_hi:.4f}] V; overlaps 0.4-0.6 V: {v_lo < 0.6 and v_hi > 0.4}")


def test_criterion_08_berreman_oracle(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    cases = 0
    for _ in range(30):
        n1, n2, n3 = rng.uniform(1.0, 1.8), rng.uniform(1.2, 2.5), rng.uniform(1.0, 1.8)
        d, lam = rng.uniform(50e-9, 5e-6), rng.uniform(400e-9, 800e-9)
        theta = rng.uniform(0, np.arcsin(0.95 * min(n1, n3) / n1))
        for pol, jones in (("p", (1, 0)), ("s", (0, 1))):
            t, r, _ = transmittance([OpticalLayer.isotropic(d, n2)], PlaneWaveSpec(lam, n1 * np.sin(theta), n1, n3), jones)
            tr, rr = airy_slab(n1, n2, n3, d, lam, theta, pol)
            worst = max(worst, abs(t - tr), abs(r - rr))
            cases += 1
    s = MODEL.s_eq
    nz = 129
    cell = lc_column_to_stack(np.tile([1.0, 0, 0], (nz, 1)), np.full(nz, s), 80e-6 / nz, RDP, s)
    cons = 0.0
    for pol in [(1, 0), (0, 1), (1, 1), (1, 1j)]:
        t, r, _ = transmittance(cell, PlaneWaveSpec(532e-9, 0.0, 1.5, 1.5), pol)
        cons = max(cons, abs(t + r - 1))
    ok = cases >= 50 and worst < 1e-8 and cons < 1e-10
    verdict(report, 8, ok, f"{cases} oracle cases, max |dT|,|dR| = {worst:.2e}; LC cell |T+R-1| = {cons:.2e}")


def test_criterion_09_gradient_check(report):
    stack = CellStack(grid_nz=17)
    disc = solver1d.Discrete1D(stack, MODEL, 1.0)
    rng = np.random.default_rng(9)
    worst = 0.0
    h = 1e-7
    for _ in range(20):
        n = rng.standard_normal(3)
        q = MODEL.uniaxial(n / np.linalg.norm(n)) + 0.01 * rng.standard_normal((17, 5))
        fd = np.zeros_like(q)
        for k in range(17):
            for c in range(5):
                qp, qm = q.copy(), q.copy()
                qp[k, c] += h
                qm[k, c] -= h
                fd[k, c] = (disc.energy(qp) - disc.energy(qm)) / (2 * h)
        h_fd = -(fd @ GRAM_INV.T) / disc.w[:, None]
        h_an = disc.molecular_field(q)
        worst = max(worst, np.linalg.norm(h_fd - h_an) / np.linalg.norm(h_an))
    verdict(report, 9, worst < 1e-5, f"max relative error over 20 states {worst:.2e}")


def test_criterion_10_energy_monotone(report, sweep):
    curve, _ = sweep
    steps = 0
    rises = 0
    for state in curve.states:
        d = np.diff(state.energy_history)
        steps += d.size
        rises += int(np.sum(d > 0))
    verdict(report, 10, rises == 0 and steps > 0, f"{steps} accepted steps over the sweep, {rises} energy increases")


def test_criterion_11_transmittance_profile(report):
    t0 = time.perf_counter()
    plate = STACK.replace(electrode_pattern="plate")
    one = solver1d.relax(plate, MODEL, 1.0)
    state = solver2d.relax(STACK, MODEL, 1.0)
    _, t, _ = solver2d.transmittance_profile_2d(state, STACK, MODEL)
    _, tp, _ = solver2d.transmittance_profile_2d(one, plate, MODEL)
    seconds = time.perf_counter() - t0
    mesh = solver2d.Mesh2D(STACK)
    fingers = mesh.bottom_fingers | mesh.top_fingers
    in_band = bool(np.all((t >= 0.70) & (t <= 0.95)))
    minima = bool(t[fingers].max() < t[~fingers].min())
    brighter = bool(t.mean() > tp[0])
    monotone = bool(np.all(np.diff(state.energy_history) <= 0))
    ok = in_band and minima and brighter and monotone and seconds < 600
    verdict(
        report,
        11,
        ok,
        f"T(x) in [{t.min():.4f}, {t.max():.4f}], minima at fingers {minima}, average {t.mean():.4f} vs plate {tp[0]:.4f}, "
        f"{seconds:.0f} s",
    )


def test_criterion_12_bandwidth(report):
    m = calibrate()
    widths = []
    for eps in np.linspace(14.0, 32.0, 10):
        f0 = frequency_from_eps(m, eps)
        f, s = s11_curve(m, eps, np.linspace(f0 - 100e6, f0 + 100e6, 4001))
        widths.append(bandwidth_minus10db(f, s))
    lo, hi = min(widths), max(widths)
    verdict(report, 12, 10e6 <= lo and hi <= 25e6, f"-10 dB bandwidth {lo / 1e6:.2f}-{hi / 1e6:.2f} MHz (Q = {m.q_factor:.3f})")
