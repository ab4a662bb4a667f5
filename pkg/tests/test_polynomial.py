import numpy as np
import pytest

from juliadim.polynomial import (
    Polynomial,
    critical_points,
    orbit_derivative,
    power,
    preimage_roots,
    roots,
)

CHEB = Polynomial([-2, 0, 1])  # z^2 - 2


def cubic(eps, beta):
    return Polynomial([-beta, 0, 1, eps])


def test_eval_constant_term():
    assert CHEB(0) == -2


def test_eval_cubic_at_zero_is_minus_beta():
    beta = 1.937
    assert cubic(0.05, beta)(0) == -beta


def test_eval_square_at_one_plus_i():
    assert power(2)(1 + 1j) == pytest.approx(2j)


def test_eval_matches_numpy_array_path():
    z = np.array([0.3 + 0.1j, -1.2j, 2.0])
    assert np.allclose(CHEB(z), z * z - 2)


def test_derivative_chebyshev():
    d = CHEB.derivative()
    assert np.allclose(d.coeffs, [0, 2])


def test_derivative_cubic_and_its_roots():
    eps = 0.05
    d = cubic(eps, 1.9).derivative()
    assert np.allclose(d.coeffs, [0, 2, 3 * eps])
    rs = roots(d)
    vals = sorted(r.real for r, _ in rs)
    assert vals[0] == pytest.approx(-2 / (3 * eps), abs=1e-10)
    assert vals[1] == pytest.approx(0.0, abs=1e-12)


def test_derivative_of_cube_at_one():
    assert power(3).derivative()(1.0) == pytest.approx(3.0)


def test_derivative_linearity_exact():
    # exact equality needs exactly representable data: small integers
    p = Polynomial([3, -1, 4, 0, 2])
    q = Polynomial([1, 5, -2, 7, 1])
    a, b = 3 - 2j, -5 + 1j
    combo = Polynomial(a * p.coeffs + b * q.coeffs)
    lhs = combo.derivative().coeffs
    rhs = a * p.derivative().coeffs + b * q.derivative().coeffs
    assert np.array_equal(lhs, rhs)


def test_orbit_derivative_square_map():
    z, d = orbit_derivative(power(2), 1.0, 3)
    assert z == pytest.approx(1.0)
    assert d == pytest.approx(8.0)


def test_orbit_derivative_chebyshev_fixed_point():
    z, d = orbit_derivative(CHEB, 2.0, 2)
    assert z == pytest.approx(2.0)
    assert d == pytest.approx(16.0)


def test_orbit_derivative_zero_steps():
    z, d = orbit_derivative(CHEB, 0.3 + 0.4j, 0)
    assert z == 0.3 + 0.4j
    assert d == 1.0


def test_orbit_derivative_overflow_sentinel():
    z, d = orbit_derivative(power(2), 10.0, 300)
    assert np.isinf(abs(z)) and np.isinf(abs(d))


def test_orbit_derivative_cocycle():
    p = cubic(0.05, 1.9)
    z0 = 0.21 - 0.34j
    n, m = 4, 3
    zn, dn = orbit_derivative(p, z0, n)
    _, dm = orbit_derivative(p, zn, m)
    _, dnm = orbit_derivative(p, z0, n + m)
    assert abs(dnm - dn * dm) <= 1e-10 * abs(dnm)


def test_roots_quadratic():
    rs = roots(Polynomial([-4, 0, 1]))
    pts = sorted((r for r, _ in rs), key=lambda z: z.real)
    assert pts[0] == pytest.approx(-2)
    assert pts[1] == pytest.approx(2)
    assert all(m == 1 for _, m in rs)


def test_roots_critical_equation_of_cubic():
    # 3*eps*z^2 + 2z with eps = 0.05 vanishes at 0 and -40/3
    rs = roots(Polynomial([0, 2, 3 * 0.05]))
    pts = sorted((r for r, _ in rs), key=lambda z: z.real)
    assert pts[0] == pytest.approx(-40.0 / 3.0, abs=1e-9)
    assert pts[1] == pytest.approx(0.0, abs=1e-12)


def test_roots_preimage_equation():
    # w^2 - (x + 2) for x = 2: the preimages of 2 under z^2 - 2
    rs = roots(Polynomial([-(2 + 2), 0, 1]))
    pts = sorted((r for r, _ in rs), key=lambda z: z.real)
    assert pts == [pytest.approx(-2), pytest.approx(2)]


def test_critical_points_chebyshev():
    cps = critical_points(CHEB)
    assert len(cps) == 1
    r, m = cps[0]
    assert r == pytest.approx(0.0, abs=1e-12) and m == 1


def test_critical_points_cubic_family():
    eps = 0.05
    cps = critical_points(cubic(eps, 1.9))
    pts = sorted(cps, key=lambda rm: rm[0].real)
    assert pts[0][0] == pytest.approx(-2 / (3 * eps), abs=1e-9)
    assert pts[1][0] == pytest.approx(0.0, abs=1e-11)


def test_critical_points_cube_multiplicity():
    cps = critical_points(power(3))
    assert len(cps) == 1
    r, m = cps[0]
    assert abs(r) < 1e-9 and m == 2


def test_root_product_reconstruction():
    rng = np.random.default_rng(42)
    for _ in range(25):
        deg = int(rng.integers(1, 7))
        c = rng.uniform(-1, 1, deg + 1) + 1j * rng.uniform(-1, 1, deg + 1)
        while abs(c[-1]) < 0.2:
            c[-1] = rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)
        p = Polynomial(c)
        rs = roots(p)
        rebuilt = np.array([1.0 + 0j])
        for r, m in rs:
            for _ in range(m):
                rebuilt = np.convolve(rebuilt, np.array([-r, 1.0]))
        rebuilt = rebuilt * p.coeffs[-1]
        assert np.max(np.abs(rebuilt - p.coeffs)) < 1e-8


def test_preimage_roots_batched_square():
    targets = np.array([1.0, 4.0, -1.0], dtype=complex)
    w = preimage_roots(power(2), targets)
    assert w.shape == (3, 2)
    for row, x in zip(w, targets):
        assert np.allclose(row**2, x)


def test_preimage_roots_scalar_and_order_deterministic():
    w1 = preimage_roots(CHEB, 0.37 + 0.21j)
    w2 = preimage_roots(CHEB, 0.37 + 0.21j)
    assert w1.shape == (2,)
    assert np.array_equal(w1, w2)
    ang = np.angle(w1)
    assert ang[0] <= ang[1]


def test_preimage_roots_double_root_at_critical_value():
    # target -2 sits at the critical value of z^2 - 2: double root at 0
    w = preimage_roots(CHEB, -2.0)
    assert np.max(np.abs(w)) < 1e-6


def test_extended_precision_polish():
    rs = roots(Polynomial([-2, 0, 1]), precision="extended")
    vals = sorted(r.real for r, _ in rs)
    assert vals[1] == pytest.approx(np.sqrt(2), abs=1e-15)


def test_trailing_zeros_stripped():
    p = Polynomial([1, 2, 0])
    assert p.degree == 1
    assert p(3.0) == 7.0
