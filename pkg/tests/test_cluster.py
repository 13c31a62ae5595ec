import csv
import math

import numpy as np
import pytest

from hlcompete import builtin_profile
from hlcompete.cluster import (
    BLUE, RED, ClusterState, boundary_flow, evaluate_map, grow, harmonic_state, lambda_grid,
    leading_coefficient, render,
)
from hlcompete.errors import DomainError
from hlcompete.experiments import equivalence_discrepancy
from hlcompete.slitmap import canonical_angle, slit_length_from_capacity, slit_map_rotated

S4 = builtin_profile("section4")
HL0 = builtin_profile("hl0")


@pytest.fixture(scope="module")
def small():
    return grow(S4, 1e-2, n_particles=60, seed=5)


def single(theta, c=1e-2, red=True):
    return ClusterState(c=c, profile_source={"builtin": "hl0"}, seed=None, theta=np.array([theta]),
                        capacity=np.array([c]), red=np.array([red]), times=np.array([0.1]),
                        x_trace=np.array([1.0]))


def test_empty_cluster():
    cl = grow(S4, 1e-2, n_particles=0, seed=1)
    assert cl.n == 0 and harmonic_state(cl) == 1.0
    assert evaluate_map(cl, 0, 3.0 + 1j) == 3.0 + 1j
    geom = render(cl)
    assert len(geom.polylines) == 2 and geom.colours == [RED, BLUE]


def test_grow_argument_checks():
    with pytest.raises(ValueError):
        grow(S4, 1e-2)
    with pytest.raises(ValueError):
        grow(S4, 1e-2, n_particles=3, t_max=1.0)
    with pytest.raises(DomainError):
        grow(S4, 0.0, n_particles=3)


def test_grow_deterministic(small):
    again = grow(S4, 1e-2, n_particles=60, seed=5)
    assert np.array_equal(small.theta, again.theta)
    assert np.array_equal(small.x_trace, again.x_trace)
    assert small.n == 60 and np.all(np.diff(small.times) > 0)


def test_interface_is_boundary_flow_of_0_and_1(small):
    z0, z1 = boundary_flow(small, [0.0, 1.0])
    assert z0 == pytest.approx(small.z0, abs=1e-14)
    assert z1 == pytest.approx(small.z1, abs=1e-14)
    assert harmonic_state(small) == pytest.approx(z1 - z0, abs=1e-14)


def test_colour_is_side_of_interface(small):
    # particle k is red exactly when it lands on the red arc (z0, z1) of its time
    for k in range(small.n):
        z0, z1 = boundary_flow(small, [0.0, 1.0], upto_n=k)
        offset = canonical_angle(small.theta[k] - z0) % 2.0
        assert bool(small.red[k]) == bool(0.0 < offset < z1 - z0)


def test_harmonic_measure_conserved(small):
    # images of a partition of the circle still tile a full turn
    pts = np.linspace(-1.0, 1.0, 4001)
    img = boundary_flow(small, pts)
    assert np.all(np.diff(img) >= 0.0)
    assert img[-1] - img[0] == pytest.approx(2.0, abs=1e-12)


def test_single_particle_map():
    cl = single(0.3)
    z = np.array([2.0 + 0.5j, -1.5, 1j * 4])
    assert np.allclose(evaluate_map(cl, 1, z), slit_map_rotated(1e-2, 0.3, z), atol=0)
    with pytest.raises(DomainError):
        evaluate_map(cl, 1, 0.2)
    with pytest.raises(ValueError):
        evaluate_map(cl, 2, 2.0)


def test_leading_coefficient_is_total_capacity(small):
    assert leading_coefficient(small) == pytest.approx(small.capacity.sum(), abs=1e-9)


def test_single_particle_render_is_radial_segment():
    c = 1e-2
    d = slit_length_from_capacity(c)
    geom = render(single(0.0, c), samples_per_particle=10)
    seg = geom.polylines[2]
    assert np.allclose(seg.imag, 0.0, atol=1e-15)
    assert seg.real[0] == pytest.approx(1.0) and seg.real[-1] == pytest.approx(1.0 + d)
    assert np.all(np.diff(seg.real) > 0)


def test_lambda_grid():
    g = lambda_grid(0.5, 6)
    assert g[0] == 1.0 and g[-1] == 1.5 and np.all(np.diff(g) > 0)
    with pytest.raises(ValueError):
        lambda_grid(0.5, 1)


def test_render_particles_attach_to_boundary(small):
    geom = render(small, samples_per_particle=40)
    bases = np.array([p[0] for p in geom.polylines[2:]])
    assert np.all(np.abs(bases) >= 1.0 - 1e-9)
    # each particle's base is the image of the circle point it attached to
    for k in (0, 10, 59):
        expect = evaluate_map(small, k, np.exp(1j * math.pi * small.theta[k]))
        assert abs(bases[k] - expect) < 1e-9


def test_render_continuity(small):
    coarse = render(small, samples_per_particle=12)
    fine = render(small, samples_per_particle=400)
    for a, b in zip(coarse.polylines[2:], fine.polylines[2:]):
        assert abs(a[0] - b[0]) < 1e-12 and abs(a[-1] - b[-1]) < 1e-12
        steps = np.abs(np.diff(b))
        assert steps.max() <= 0.05 * np.abs(b[-1] - b[0]) + 1e-12


def test_render_colours_and_indices(small):
    geom = render(small)
    assert geom.particle_index[:2] == [0, 0]
    assert geom.particle_index[2:] == list(range(1, small.n + 1))
    assert [c == RED for c in geom.colours[2:]] == list(small.red)


def test_svg_deterministic_and_roundtrip(tmp_path, small):
    a = render(small).to_svg()
    b = render(grow(S4, 1e-2, n_particles=60, seed=5)).to_svg()
    assert a == b
    small.save(tmp_path / "cl.json")
    back = ClusterState.load(tmp_path / "cl.json")
    assert render(back).to_svg() == a
    assert a.startswith("<svg") or a.startswith("<?xml")
    assert "#c0392b" in a and "#2463a8" in a


def test_geometry_csv(tmp_path, small):
    geom = render(small, samples_per_particle=5)
    geom.to_csv(tmp_path / "g.csv")
    with open(tmp_path / "g.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["particle_index", "colour", "point_index", "re", "im"]
    assert len(rows) - 1 == sum(len(p) for p in geom.polylines)
    assert {r[1] for r in rows[1:]} == {RED, BLUE}


def test_absorbed_cluster_freezes():
    cl = grow(HL0, 1e-2, t_max=60.0, seed=3)
    assert cl.absorbed
    final = cl.z1 - cl.z0
    assert final in (0.0, 2.0)
    k = int(np.argmax((cl.x_trace <= 0.0) | (cl.x_trace >= 2.0)))
    assert np.all(cl.x_trace[k:] == final)
    # every later particle takes the winning colour
    assert np.all(cl.red[k + 1:] == (final == 2.0))


@pytest.mark.parametrize("seed", range(8))
def test_matches_jump_process(seed):
    d, n = equivalence_discrepancy(S4, 1e-2, 1.0, seed)
    assert n > 100 and d <= 1e-12


def test_particles_view(small):
    parts = small.particles
    assert len(parts) == small.n and parts[0].index == 1
    assert parts[3].colour == (RED if small.red[3] else BLUE)
