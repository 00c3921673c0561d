"""Tests for the spine-dual decomposition.

Independent oracles used here:
  * hyperbolic quadrature of the h-gon indicator (area element
    4/(1-|z|^2)^2) against the closed-form Gauss-Bonnet area;
  * a small-parameter reading of corner divergence: after translating the
    corner to the origin, each side satisfies y ~ (v/2) x^2 against the
    common tangent, so v is recovered from two sample scales by
    Richardson extrapolation, with no circle fitting;
  * containment counting over random points for the tiling property.
"""

import numpy as np

from idealpoly import hypcore as hc
from idealpoly.decomp import (
    Decomposition,
    compatible_truncation,
    corner_divergence,
    decompose,
    hgon_metrics,
    hgon_radius_bound,
    truncation_band_factor,
)
from idealpoly.hypcore import (
    GeometryError,
    Mobius,
    busemann_level,
    corner_arclength,
    dist,
)
from idealpoly.polygon import IdealPolygon, regular

rng = np.random.default_rng(20260825)

QUAD = IdealPolygon(
    [0.18025835588015413, 0.8078304089805352, 3.137055329483761, 3.779325642911732]
)
PENT = IdealPolygon([0.0, 1.1, 2.9, 3.7, 5.3])


def _random_thick(rng, n, min_gap=0.4):
    while True:
        th = np.sort(rng.uniform(0.0, 2.0 * np.pi, n))
        gaps = np.diff(np.concatenate([th, [th[0] + 2.0 * np.pi]]))
        if gaps.min() > min_gap:
            return IdealPolygon(th)


def _interior_points(P, rng, count):
    out = []
    while len(out) < count:
        z = rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)
        if abs(z) < 0.999 and P.contains(z, slack=-1e-9):
            out.append(z)
    return out


# ---------------------------------------------------------------------------
# piece counts and exact constants


def test_regular_triangle_decomposition():
    D = decompose(regular(3))
    assert len(D.hgons) == 1 and len(D.rectangles) == 0 and len(D.spikes) == 3
    H = D.hgons[0]
    r, lens, divs, gap = hgon_metrics(H)
    assert abs(r - np.log(3.0) / 2.0) < 1e-12
    assert np.allclose(lens, 1.0, atol=1e-12)
    assert np.allclose(divs, 4.0, atol=1e-9)
    assert gap == np.inf
    assert abs(H.area() - (np.pi - 3.0)) < 1e-12
    for s in D.spikes.values():
        assert abs(s.area() - 1.0) < 1e-12
    assert abs(D.total_area() - np.pi) < 1e-12


def test_quad_decomposition_frozen():
    D = decompose(QUAD)
    assert len(D.hgons) == 2 and len(D.rectangles) == 1 and len(D.spikes) == 4
    R = D.rectangles[(1, 3)]
    assert abs(R.X - 0.64855190656143913) < 1e-12
    assert abs(R.Y1 + 1.1086956262915102) < 1e-10
    assert abs(R.Y2 - 1.1086956262915124) < 1e-10
    # height is exactly the spine edge weight
    w = D.spine.tree.system.arcs[(1, 3)]
    assert abs(R.height - w) < 1e-10
    # the axis crosses this rectangle, so the width is the geodesic leaf
    assert R.width == R.X
    assert abs(D.hgons[0].area() - 0.1598337604583342) < 1e-12
    _, lens, divs, _ = hgon_metrics(D.hgons[0])
    assert np.allclose(
        sorted(lens),
        [1.0530397962336098, 1.0530397962336131, 1.0896943668369967],
        atol=1e-10,
    )
    assert np.allclose(
        sorted(divs),
        [3.6072016655569685, 3.6072016655569712, 3.999999999999992],
        atol=1e-8,
    )
    assert abs(D.total_area() - 2.0 * np.pi) < 1e-12


def test_adjacency_map():
    D = decompose(QUAD)
    adj = D.adjacency
    assert adj[("rect", (1, 3))] == [("hgon", 0), ("hgon", 1)]
    assert ("rect", (1, 3)) in adj[("hgon", 0)]
    spike_links = [k for k in adj[("hgon", 0)] if k[0] == "spike"]
    assert len(spike_links) == 2


# ---------------------------------------------------------------------------
# geometric invariants of the pieces


def _disk_velocity(X, dX):
    z = (X[1] + 1j * X[2]) / (1.0 + X[0])
    return ((dX[1] + 1j * dX[2]) - z * dX[0]) / (1.0 + X[0])


def _side_tangent(P, i, z):
    """Disk tangent direction of polygon side i at the point z on it."""
    g = P.side(i)
    o, w = g.frame
    t = g.coord_of(z)
    X = o * np.cosh(t) + w * np.sinh(t)
    return _disk_velocity(X, o * np.sinh(t) + w * np.cosh(t))


def test_sides_orthogonal_to_polygon_and_circumcircle():
    for P in (regular(3), QUAD, PENT):
        D = decompose(P)
        for H in D.hgons:
            k = len(H.sides)
            c_c, r_c = H.circumcircle.euclidean()
            for t in range(k):
                arc = H.sides[t]
                # corner sits on the polygon side and on the circumcircle
                side = H.corner_sides[t]
                assert abs(P.inward_distance(side, arc.p)) < 1e-9
                assert abs(dist(H.center, arc.p) - H.radius) < 1e-9
                # the arc leaves the corner orthogonally to the side
                # (disk model is conformal, so Euclidean angles suffice)
                tau = arc.tangent_at(0.0)
                sig = _side_tangent(P, side, arc.p)
                ip = np.conj(tau / abs(tau)) * (sig / abs(sig))
                assert abs(ip.real) < 1e-9
                # supporting circle orthogonal to the circumcircle
                c_a, r_a = arc.euclidean_circle()
                assert abs(abs(c_a - c_c) ** 2 - (r_a**2 + r_c**2)) < 1e-9


def test_consecutive_sides_tangent_at_corners():
    for P in (regular(3), QUAD, PENT):
        D = decompose(P)
        for H in D.hgons:
            k = len(H.sides)
            for t in range(k):
                inc = H.sides[(t - 1) % k]
                out = H.sides[t]
                assert abs(inc.q - out.p) < 1e-12
                a = inc.tangent_at(inc.length)
                b = out.tangent_at(0.0)
                ip = np.conj(a / abs(a)) * (b / abs(b))
                # angle-zero corner: velocities anti-parallel (cusp)
                assert abs(ip.imag) < 1e-9
                assert ip.real < 0


def test_arc_parametrizations():
    D = decompose(PENT)
    for H in D.hgons:
        for arc in H.sides:
            assert abs(arc.point_at(0.0) - arc.p) < 1e-12
            assert abs(arc.point_at(arc.length) - arc.q) < 1e-12
            # unit speed: chord of a small step has matching length
            s = np.linspace(0.0, arc.length, 9)
            pts = arc.point_at(s)
            steps = dist(pts[:-1], pts[1:])
            assert np.all(steps <= arc.length / 8 + 1e-12)
            if arc.kind == "horocycle":
                assert abs(arc.length - hc.horocycle_arc_length(arc.p, arc.q)) < 1e-10
                lev = busemann_level(arc.base, pts[1:-1])
                assert np.max(np.abs(lev - arc.level)) < 1e-10


def test_rectangle_chart_and_shared_boundaries():
    D = decompose(QUAD)
    R = D.rectangles[(1, 3)]
    # chart corners are the four tangency feet
    assert abs(R.point(0.0, R.Y1) - R.bottom.p) < 1e-10
    assert abs(R.point(R.X, R.Y1) - R.bottom.q) < 1e-10
    assert abs(R.point(0.0, R.Y2) - R.top.p) < 1e-10
    assert abs(R.point(R.X, R.Y2) - R.top.q) < 1e-10
    # bottom boundary traced in the chart equals the h-gon's arc pointwise
    xs = np.linspace(0.0, R.X, 17)
    chart = R.point(xs, np.full_like(xs, R.Y1))
    arc = R.bottom.point_at(xs * np.cosh(R.Y1))
    assert np.max(np.abs(chart - arc)) < 1e-11
    # left boundary is a vertical geodesic segment inside polygon side 1
    ys = np.linspace(R.Y1, R.Y2, 9)
    left = R.point(np.zeros_like(ys), ys)
    assert np.max(np.abs([QUAD.inward_distance(1, z) for z in left])) < 1e-9
    # right angles at the corners: vertical and horizontal chart directions
    h = 1e-6
    for x, y in [(0.0, R.Y1), (0.0, R.Y2), (R.X, R.Y1), (R.X, R.Y2)]:
        du = (R.point(x + h, y) - R.point(x - h, y)) / (2 * h)
        dv = (R.point(x, y + h) - R.point(x, y - h)) / (2 * h)
        ip = np.conj(du / abs(du)) * (dv / abs(dv))
        assert abs(ip.real) < 1e-8
    # chart round trip
    for x, y in [(0.1, 0.0), (0.5, -0.9), (0.62, 1.05)]:
        z = R.point(x, y)
        xx, yy = R.coords(z)
        assert abs(xx - x) < 1e-10 and abs(yy - y) < 1e-10


# ---------------------------------------------------------------------------
# area oracles


def _hgon_indicator(P, H, Z):
    """Vectorized membership of complex array Z in the h-gon H (the side
    conditions describe it only inside the polygon, so intersect)."""
    ok = np.ones(Z.shape, dtype=bool)
    X = hc.disk_to_hyperboloid(Z)
    for i in range(P.n):
        ok &= np.arcsinh(hc.mink(X, P.inward_pole(i))) >= 0.0
    for arc in H.sides:
        if arc.kind == "horocycle":
            ok &= busemann_level(arc.base, Z) - arc.level >= 0.0
        else:
            y = hc.Hypercycle(arc.axis, 0.0).coords_of(Z)[1]
            ok &= (y - arc.offset) * np.sign(arc.offset - arc.offset_other) >= 0.0
    return ok


def test_hgon_area_quadrature_oracle():
    for P, face in ((regular(3), 0), (QUAD, 0), (QUAD, 1)):
        D = decompose(P)
        H = D.hgons[face]
        pts = np.array(H.corners)
        lo, hi = pts.real.min() - 0.25, pts.real.max() + 0.25
        lo2, hi2 = pts.imag.min() - 0.25, pts.imag.max() + 0.25
        m = 1201
        xs = np.linspace(lo, hi, m)
        ys = np.linspace(lo2, hi2, m)
        X, Y = np.meshgrid(xs, ys)
        Z = (X + 1j * Y).ravel()
        safe = np.abs(Z) < 0.999
        inside = np.zeros(Z.shape, dtype=bool)
        inside[safe] = _hgon_indicator(P, H, Z[safe])
        dens = np.where(inside, 4.0 / (1.0 - np.abs(Z) ** 2) ** 2, 0.0)
        quad = dens.sum() * (xs[1] - xs[0]) * (ys[1] - ys[0])
        assert abs(quad - H.area()) < 5e-3


def test_piece_areas_sum_random():
    for n in range(3, 9):
        P = _random_thick(rng, n)
        D = decompose(P)
        assert abs(D.total_area() - (n - 2) * np.pi) < 1e-9
        areas = D.piece_areas()
        assert len(areas) == len(D.hgons) + len(D.rectangles) + len(D.spikes)
        assert all(a > 0 for a in areas.values())


# ---------------------------------------------------------------------------
# corner divergence


def _divergence_oracle(H, t):
    """Chart reading of |v_in - v_out| from points near the corner: in the
    translated frame each side obeys y ~ (v/2) x^2 against the common
    tangent, sampled at two scales and Richardson-extrapolated."""
    k = len(H.sides)
    inc, out = H.sides[(t - 1) % k], H.sides[t]
    M = Mobius.disk_translation(out.p).inv()
    tau = M.deriv(out.p) * inc.tangent_at(inc.length)
    tau /= abs(tau)

    def v_of(arc, s_of):
        def read(s):
            w = complex(M.apply(arc.point_at(s_of(s)))) * np.conj(tau)
            return 2.0 * w.imag / w.real**2

        s = 1e-3 * min(1.0, arc.length)
        return (4.0 * read(0.5 * s) - read(s)) / 3.0

    v_in = v_of(inc, lambda s: inc.length - s)
    v_out = v_of(out, lambda s: s)
    return abs(v_in - v_out)


def test_corner_divergence_oracle():
    for P in (regular(3), QUAD, PENT):
        D = decompose(P)
        for H in D.hgons:
            for t in range(len(H.sides)):
                got = corner_divergence(H, t)
                want = _divergence_oracle(H, t)
                assert abs(got - want) < 5e-6 * max(1.0, want)
                assert got > 0.1


def test_hgon_bounds_random():
    for n in range(3, 9):
        P = _random_thick(rng, n)
        D = decompose(P)
        rn = hgon_radius_bound(n)
        for H in D.hgons:
            r, lens, divs, gap = hgon_metrics(H)
            assert r <= rn + 1e-9
            assert min(lens) >= 1.0 - 1e-6
            assert min(divs) > 0.0
            assert gap > 0.0
        for R in D.rectangles.values():
            assert 1.0 - 1e-6 <= R.bottom.length <= 2 * rn + 1e-9
            assert 1.0 - 1e-6 <= R.top.length <= 2 * rn + 1e-9
            if R.Y1 <= 0.0 <= R.Y2:
                assert R.width == R.X
            else:
                assert abs(R.width - min(R.bottom.length, R.top.length)) < 1e-12


# ---------------------------------------------------------------------------
# tiling


def test_tiling_disjoint_and_covering():
    for P in (QUAD, PENT):
        D = decompose(P)
        for z in _interior_points(P, rng, 250):
            strict = []
            for a, R in D.rectangles.items():
                if R.contains(z, tol=-1e-7):
                    strict.append(("rect", a))
            for k, s in D.spikes.items():
                if s.contains(z, polygon=P, tol=-1e-7):
                    strict.append(("spike", k))
            for H in D.hgons:
                if min(H.side_slacks(z)) > 1e-7:
                    strict.append(("hgon", H.face))
            assert len(strict) <= 1
            key = D.locate(z)
            if strict:
                assert key == strict[0]


def test_locate_on_shared_boundaries():
    D = decompose(QUAD)
    R = D.rectangles[(1, 3)]
    z = R.point(0.37 * R.X, R.Y1)
    assert D.locate(z) == ("rect", (1, 3))
    f = R.faces[0]
    assert abs(min(D.hgons[f].side_slacks(z))) < 1e-9
    # a point on a gap arc belongs to the spike by priority, and the
    # owning h-gon's margin vanishes there
    H = D.hgons[0]
    k, idx = next(iter(H.gap_arcs.items()))
    arc = H.sides[idx]
    z = complex(arc.point_at(0.5 * arc.length))
    assert D.locate(z) == ("spike", k)
    assert abs(min(H.side_slacks(z))) < 1e-9


# ---------------------------------------------------------------------------
# truncations


def test_truncation_regular_is_constant():
    tr = compatible_truncation(regular(5), 0.03)
    assert tr.tr == {0: 0.03}
    assert tr.residual == 0.0
    lo, hi = tr.band
    assert lo < 0.03 < hi


def test_truncation_quad_flow_factor():
    D = decompose(QUAD)
    tr = compatible_truncation(QUAD, 0.02, decomposition=D)
    R = D.rectangles[(1, 3)]
    f, g = R.faces
    a_f = corner_arclength(2.0 * np.tanh(abs(R.Y1)), tr.tr[f])
    a_g = corner_arclength(2.0 * np.tanh(abs(R.Y2)), tr.tr[g])
    assert abs(a_g / a_f - np.cosh(R.Y2) / np.cosh(R.Y1)) < 1e-12
    assert tr.residual < 1e-8


def test_truncation_band_random():
    for n in range(4, 9):
        P = _random_thick(rng, n)
        C = truncation_band_factor(n)
        tr = compatible_truncation(P, 0.01)
        for e in tr.tr.values():
            assert 0.01 / C < e < 0.01 * C
        assert tr.residual < 1e-8
        assert len(tr.tr) == n - 2


def test_truncation_eps_too_large():
    try:
        compatible_truncation(QUAD, 0.8)
        assert False, "expected a truncatability error"
    except GeometryError as e:
        assert "smaller" in str(e) or "try eps" in str(e)
    # a modest eps still works on the same polygon
    tr = compatible_truncation(QUAD, 0.05)
    assert tr.residual < 1e-8
