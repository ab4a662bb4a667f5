import math

import numpy as np
import pytest

from juliadim.errors import WitnessFailed
from juliadim.escape import (
    Connectivity,
    DynSetup,
    classify,
    connectivity_class,
    escape_radius,
    escape_steps,
    render,
)
from juliadim.grid import Box, read_pgm, write_pgm
from juliadim.polynomial import Polynomial, power, preimage_roots

CHEB = Polynomial([-2, 0, 1])


def fig1_poly():
    a = 0.215
    b = (1 - math.sqrt(1 - 4 * a)) / (2 * a)
    return Polynomial([-b, 0, 1, a])


def test_escape_radius_chebyshev():
    assert escape_radius(CHEB) == pytest.approx(4.0)


def test_escape_radius_square():
    assert escape_radius(power(2)) == pytest.approx(2.0)


def test_escape_radius_cubic_formula():
    p = Polynomial([-1.455, 0, 1, 0.215])
    expected = (2 + 1 + 1.455) / 0.215
    assert escape_radius(p) == pytest.approx(expected)
    assert expected == pytest.approx(20.72, abs=0.01)


def test_witness_brute_force_on_chebyshev():
    # independent dense check that |f| >= 2|z| on |z| = R
    R = 4.0
    theta = np.linspace(0, 2 * np.pi, 10000, endpoint=False)
    z = R * np.exp(1j * theta)
    assert np.min(np.abs(z * z - 2)) >= 2 * R - 1e-9


def test_witness_failure_for_undersized_radius():
    with pytest.raises(WitnessFailed):
        DynSetup(CHEB, R=1.5)


def test_classify_critical_orbit_bounded():
    setup = DynSetup(CHEB)
    res = classify(setup, 0.0)
    assert not res.escaped  # orbit 0 -> -2 -> 2 -> 2 ...


def test_classify_exit_step():
    setup = DynSetup(CHEB)
    res = classify(setup, 3.0)
    assert res.escaped and res.step == 1  # 3 -> 7 > 4


def test_classify_circle_point_bounded():
    setup = DynSetup(power(2))
    assert not classify(setup, 1.0).escaped


def test_classify_monotone_in_budget():
    setup_small = DynSetup(CHEB, max_iter=50)
    setup_large = DynSetup(CHEB, max_iter=5000)
    for z in [2.1, 3.0, 1.9 + 0.4j, -2.5 + 0.1j]:
        a = classify(setup_small, z)
        b = classify(setup_large, z)
        if a.escaped:
            assert b.escaped and b.step == a.step


def test_bounded_orbits_never_exceed_radius():
    setup = DynSetup(CHEB, max_iter=400)
    for z in [0.0, 1.0, -1.7, 0.5]:
        if classify(setup, z).escaped:
            continue
        w = complex(z)
        for _ in range(400):
            assert abs(w) <= setup.R
            w = setup.p(w)


def test_connectivity_chebyshev_connected():
    rep = connectivity_class(DynSetup(CHEB))
    assert rep.kind is Connectivity.CONNECTED


def test_connectivity_escaping_critical_orbit():
    rep = connectivity_class(DynSetup(Polynomial([-6, 0, 1])))
    # R = 8 and the critical orbit runs 0 -> -6 -> 30 > 8
    assert rep.kind is Connectivity.TOTALLY_DISCONNECTED
    assert "sufficient" in rep.note


def test_connectivity_mixed_for_cubic_with_period_two():
    rep = connectivity_class(DynSetup(fig1_poly()))
    assert rep.kind is Connectivity.DISCONNECTED


def test_complete_invariance_on_basilica():
    p = Polynomial([-1, 0, 1])  # z^2 - 1, superattracting 2-cycle
    setup = DynSetup(p)
    rng = np.random.default_rng(3)
    found = 0
    pts = rng.uniform(-1.2, 1.2, 4000) + 1j * rng.uniform(-1.2, 1.2, 4000)
    steps = escape_steps(p, pts, setup.R, setup.max_iter)
    bounded = pts[steps < 0]
    for z in bounded[:100]:
        for w in preimage_roots(p, z):
            assert not classify(setup, w).escaped
        found += 1
    assert found == 100


def test_render_square_map_unit_disc():
    # dyadic grid: every center modulus is exactly comparable with 1
    setup = DynSetup(power(2))
    box = Box(-2, 2, -2, 2)
    img = render(setup, box, 64, 64)
    centers = box.centers(64, 64)
    inside = np.abs(centers) ** 2 < 1.0
    on_circle = np.abs(centers) ** 2 == 1.0
    assert not on_circle.any()
    assert np.array_equal(img.values == 0, inside)


def test_render_chebyshev_interval_row():
    # grid chosen so one row of centers sits exactly on the real axis
    setup = DynSetup(CHEB)
    box = Box(-3.0625, 3.0625, -1.9375, 1.9375)
    img = render(setup, box, 49, 31)
    bounded = np.argwhere(img.values == 0)
    assert len(bounded) == 33
    assert set(r for r, _ in bounded) == {15}
    cols = sorted(c for _, c in bounded)
    assert cols == list(range(8, 41))  # centers -2.0 .. 2.0 inclusive


def test_render_rejects_empty_raster():
    with pytest.raises(ValueError):
        render(DynSetup(CHEB), Box(-1, 1, -1, 1), 0, 4)


def test_pgm_roundtrip(tmp_path):
    setup = DynSetup(CHEB)
    box = Box(-3.0625, 3.0625, -1.9375, 1.9375)
    img = render(setup, box, 49, 31)
    path = tmp_path / "cheb.pgm"
    img.to_pgm(path, comments=["map z^2-2", "budget 256"])
    arr, comments = read_pgm(path)
    assert np.array_equal(arr, img.values)
    assert comments == ["map z^2-2", "budget 256"]


def test_render_deterministic_bytes(tmp_path):
    setup = DynSetup(power(2))
    box = Box(-2, 2, -2, 2)
    p1, p2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
    render(setup, box, 64, 64).to_pgm(p1)
    render(setup, box, 64, 64).to_pgm(p2)
    assert p1.read_bytes() == p2.read_bytes()
