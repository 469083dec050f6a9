import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nlc_antenna.errors import DomainError, InputError
from nlc_antenna.materials import EPS0, LCMaterial, get_material, load_materials
from nlc_antenna.qtensor import (
    GRAM,
    LdGModel,
    dielectric_tensor,
    director_and_order,
    energy_densities,
    equilibrium_order,
    freedericksz_threshold,
    molecular_field,
    pack,
    thermotropic_of_order,
    tr_q2,
    uniaxial_q,
    unpack,
)
from oracles import landau_order

RDP = get_material("RDP-84909")
MODEL = LdGModel(RDP)

finite = st.floats(-1.0, 1.0, allow_nan=False)
qvec = arrays(np.float64, 5, elements=finite)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


directors = arrays(np.float64, 3, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3).map(unit)


def test_material_table():
    table = load_materials()
    assert set(table) == {"5CB", "BLO48", "RDP-84909", "E7"}
    assert RDP.eps_perp == 8.0 and RDP.delta_eps == 39.1
    assert RDP.eps_par == pytest.approx(47.1)
    assert RDP.k11 == pytest.approx(4.6e-12)


def test_unknown_material():
    with pytest.raises(InputError):
        get_material("MBBA")


def test_user_table_merges(tmp_path):
    p = tmp_path / "extra.csv"
    p.write_text(
        "name,clearing_temp_C,eps_perp,delta_eps,n_o,delta_n,k11_pN,k22_pN,k33_pN,a_coef,b_coef,c_coef\n"
        "X1,80,4,10,1.5,0.1,5,3,8,-6.5e5,-16e5,39e5\n"
    )
    table = load_materials(p)
    assert "X1" in table and "E7" in table
    assert table["X1"].k33 == pytest.approx(8e-12)


def test_material_validation():
    with pytest.raises(InputError):
        LCMaterial("bad", eps_perp=-1, delta_eps=1, n_o=1.5, delta_n=0.1, k11=1e-12, k22=1e-12, k33=1e-12)
    with pytest.raises(InputError):
        LCMaterial("bad", eps_perp=5, delta_eps=1, n_o=0.9, delta_n=0.1, k11=1e-12, k22=1e-12, k33=1e-12)


# uniaxial_q ------------------------------------------------------------------


def test_uniaxial_examples():
    assert np.all(uniaxial_q([0, 0, 1], 0.0) == 0)
    m = unpack(uniaxial_q([0, 0, 1], 0.6))
    np.testing.assert_allclose(np.diag(m), [-0.2, -0.2, 0.4], atol=1e-15)
    assert np.all(m[~np.eye(3, dtype=bool)] == 0)


def test_uniaxial_rejects_non_unit():
    with pytest.raises(InputError):
        uniaxial_q([1.0, 0.1, 0.0], 0.5)


@given(directors, st.floats(0.01, 1.0))
def test_uniaxial_recovers_director(n, s):
    q = uniaxial_q(n, s)
    m = unpack(q)
    assert abs(np.trace(m)) < 1e-13
    nn, ss = director_and_order(q)
    assert ss == pytest.approx(s, rel=1e-10)
    assert abs(abs(nn @ n) - 1) < 1e-9


@given(qvec)
def test_unpack_symmetric_traceless(q):
    m = unpack(q)
    assert np.array_equal(m, m.T)
    assert abs(np.trace(m)) < 1e-13
    np.testing.assert_allclose(pack(m), q, atol=1e-15)
    assert tr_q2(q) == pytest.approx(q @ GRAM @ q, rel=1e-12, abs=1e-15)


@given(qvec)
def test_quartic_identity(q):
    m = unpack(q)
    t2 = np.trace(m @ m)
    assert np.trace(m @ m @ m @ m) == pytest.approx(t2**2 / 2, rel=1e-12, abs=1e-14)


# equilibrium order ------------------------------------------------------------


def test_equilibrium_order_against_sampling():
    s_ref, f = landau_order(RDP.a_coef, RDP.b_coef, RDP.c_coef)
    s = equilibrium_order(RDP)
    assert s == pytest.approx(0.612975, abs=1e-6)
    assert s == pytest.approx(s_ref, abs=1e-7)
    assert thermotropic_of_order(s, RDP) < thermotropic_of_order(0.0, RDP)
    h = 1e-6
    deriv = (thermotropic_of_order(s + h, RDP) - thermotropic_of_order(s - h, RDP)) / (2 * h)
    scale = abs(thermotropic_of_order(s, RDP)) / s
    assert abs(deriv) / scale < 1e-9


def test_equilibrium_order_tr_q4_convention():
    s_ref, _ = landau_order(RDP.a_coef, RDP.b_coef, RDP.c_coef, quartic_factor=0.5)
    assert equilibrium_order(RDP, "tr_q4") == pytest.approx(s_ref, abs=1e-7)


def test_equilibrium_order_limit_small_a():
    m = LCMaterial("lim", 5, 10, 1.5, 0.1, 1e-12, 1e-12, 1e-12, a_coef=-1e-6, b_coef=-16e5, c_coef=39e5)
    assert equilibrium_order(m) == pytest.approx(16e5 / (2 * 39e5), rel=1e-9)


def test_equilibrium_order_negative_discriminant():
    m = LCMaterial("iso", 5, 10, 1.5, 0.1, 1e-12, 1e-12, 1e-12, a_coef=1e6, b_coef=-1e5, c_coef=39e5)
    with pytest.raises(DomainError):
        equilibrium_order(m)


@pytest.mark.parametrize("name", ["5CB", "BLO48", "RDP-84909", "E7"])
def test_equilibrium_beats_isotropic(name):
    m = get_material(name)
    assert thermotropic_of_order(equilibrium_order(m), m) < thermotropic_of_order(0.0, m)


# dielectric tensor ----------------------------------------------------------------


def test_dielectric_examples():
    s = MODEL.s_eq
    planar = dielectric_tensor(uniaxial_q([1, 0, 0], s), RDP, s)
    homeo = dielectric_tensor(uniaxial_q([0, 0, 1], s), RDP, s)
    assert planar[2, 2] == pytest.approx(8.0, abs=1e-12)
    assert planar[0, 0] == pytest.approx(47.1, abs=1e-12)
    assert homeo[2, 2] == pytest.approx(47.1, abs=1e-12)
    np.testing.assert_allclose(dielectric_tensor(np.zeros(5), RDP, s), RDP.eps_mean * np.eye(3))
    with pytest.raises(InputError):
        dielectric_tensor(np.zeros(5), RDP, 0.0)


@given(directors, st.floats(0.0, 1.0))
def test_dielectric_bounds(n, frac):
    s = MODEL.s_eq
    eps = dielectric_tensor(uniaxial_q(n, frac * s), RDP, s)
    w = np.linalg.eigvalsh(eps)
    assert np.allclose(eps, eps.T)
    assert w.min() >= RDP.eps_perp - 1e-9 and w.max() <= RDP.eps_par + 1e-9


@given(directors)
def test_frame_covariance(n):
    s = MODEL.s_eq
    rots = [
        np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]]),
        np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0.0]]),
        np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0.0]]),
    ]
    eps = dielectric_tensor(uniaxial_q(n, s), RDP, s)
    for r in rots:
        rotated = dielectric_tensor(uniaxial_q(r @ n, s), RDP, s)
        np.testing.assert_allclose(rotated, r @ eps @ r.T, atol=1e-12)


# threshold -------------------------------------------------------------------


def test_threshold_values():
    assert freedericksz_threshold(RDP) == pytest.approx(0.362, abs=1e-3)
    # plain evaluation of pi sqrt(K11 / (eps0 deps)) from the table constants
    assert freedericksz_threshold(get_material("E7")) == pytest.approx(np.pi * np.sqrt(11.2e-12 / (EPS0 * 14.37)), rel=1e-12)
    assert freedericksz_threshold(get_material("E7")) == pytest.approx(0.93209, abs=1e-5)
    assert freedericksz_threshold(get_material("5CB")) == pytest.approx(0.80532, abs=1e-5)


def test_threshold_scaling_and_domain():
    from dataclasses import replace

    assert freedericksz_threshold(replace(RDP, k11=4 * RDP.k11)) == pytest.approx(2 * freedericksz_threshold(RDP))
    with pytest.raises(DomainError):
        freedericksz_threshold(replace(RDP, delta_eps=-1.0))


# energy densities & molecular field ------------------------------------------------


def test_energy_density_examples():
    z = np.zeros(5)
    assert energy_densities(z, np.zeros((3, 5)), np.zeros(3), MODEL) == (0.0, 0.0, 0.0)
    q = MODEL.uniaxial(np.array([1.0, 0, 0]))
    el, th, es = energy_densities(q, np.zeros((3, 5)), np.zeros(3), MODEL)
    assert el == 0 and es == 0
    assert th == pytest.approx(thermotropic_of_order(MODEL.s_eq, RDP), rel=1e-12) and th < 0
    _, _, es = energy_densities(z, np.zeros((3, 5)), np.array([0, 0, 1e6]), MODEL)
    assert es == pytest.approx(-0.5 * EPS0 * RDP.eps_mean * 1e12, rel=1e-12)


def test_elastic_density_sums_nine_components():
    rng = np.random.default_rng(3)
    grad = rng.standard_normal((3, 5))
    el, _, _ = energy_densities(np.zeros(5), grad, np.zeros(3), MODEL)
    full = sum(np.sum(unpack(grad[a]) ** 2) for a in range(3))
    assert el == pytest.approx(0.5 * MODEL.elastic_l * full, rel=1e-12)


def test_elastic_constant_rules():
    s = MODEL.s_eq
    assert MODEL.elastic_l == pytest.approx(RDP.k11 / (2 * s**2))
    mean = LdGModel(RDP, elastic_rule="mean")
    assert mean.elastic_l == pytest.approx((4.6 + 1.2 + 13.8) / 3 * 1e-12 / (2 * s**2))


def test_molecular_field_uniform_equilibrium_is_zero():
    q = MODEL.uniaxial(np.array([0.6, 0.0, 0.8]))
    h = molecular_field(np.tile(q, (3, 1)), np.zeros(3), MODEL, 1e-6)
    scale = abs(thermotropic_of_order(MODEL.s_eq, RDP))
    assert np.max(np.abs(h)) < 1e-9 * scale


@given(arrays(np.float64, (3, 5), elements=finite), arrays(np.float64, 3, elements=st.floats(-1e5, 1e5)))
@settings(max_examples=50)
def test_molecular_field_traceless(stencil, e):
    h = molecular_field(stencil, e, MODEL, 1e-6)
    assert h.shape == (5,)
    assert abs(np.trace(unpack(h))) < 1e-14 * max(1.0, np.abs(h).max())
