"""Spine-dual decomposition of an ideal polygon.

Cutting along the h-cycles through the spine's tangency feet splits the
polygon into three kinds of pieces: one compact h-gon around each spine
vertex (its boundary alternates horocycle and hypercycle arcs and all
corners are tangencies on the polygon's sides), one flow rectangle
across each finite spine edge (a Fermi-chart box over the common
orthogeodesic of the two sides the edge connects), and one horoball
spike at each ideal vertex.

The key coincidences that make the pieces fit exactly: the inscribed
circle of a face touches the two sides of a chord at the *same* signed
offset from the orthogeodesic axis, so the rectangle over an edge is the
chart box between the two adjacent faces' offsets and its height equals
the edge weight; and the two feet adjacent to a gap lie on a common
horocycle at the ideal point, orthogonal to both sides.
"""

from dataclasses import dataclass, field

import numpy as np

from .hypcore import (
    Geodesic,
    GeometryError,
    Horocycle,
    HypCircle,
    Hypercycle,
    Mobius,
    Tolerances,
    busemann_level,
    circle_through,
    corner_arclength,
    corner_arclength_inv,
    disk_to_hyperboloid,
    dist,
    geodesic_from_pole,
    ideal_vector,
    mink,
    mink_cross,
    normalize_spacelike,
)
from .polygon import IdealPolygon, SpineTree, spine

__all__ = [
    "HArc",
    "HGon",
    "Rectangle",
    "Spike",
    "Decomposition",
    "Truncation",
    "decompose",
    "hgon_metrics",
    "compatible_truncation",
    "hgon_radius_bound",
    "truncation_band_factor",
]


def hgon_radius_bound(n: int) -> float:
    """Upper bound 2*asinh(sqrt((n-2)/4)) for the circumradius of any
    h-gon inscribed in an ideal n-gon (disk area <= polygon area)."""
    return 2.0 * np.arcsinh(np.sqrt((n - 2) / 4.0))


def truncation_band_factor(n: int) -> float:
    """Multiplicative cost (2 r_n)^(n-2) of propagating a truncation
    parameter across the whole spine tree."""
    return float((2.0 * hgon_radius_bound(n)) ** (n - 2))


# ---------------------------------------------------------------------------
# h-cycle arcs


@dataclass
class HArc:
    """One boundary arc of an h-gon: horocycle or hypercycle segment.

    The arc runs from p to q with unit-speed parameter s in [0, length].
    Horocycle arcs carry the exact quadratic hyperboloid parametrization
    X(s) = X0 + s W - s^2/(2m) Lbase; hypercycle arcs live at a constant
    signed offset over a rectangle axis, with t0/t1 the axis-chart
    coordinates of the two ends.  `offset_other` is the offset of the
    opposite face across the same rectangle; its only role is fixing the
    sign of the geodesic curvature seen from this arc's h-gon.
    """

    kind: str
    p: complex
    q: complex
    length: float
    # horocycle data
    base: float = 0.0
    level: float = 0.0
    # hypercycle data
    axis: Geodesic | None = None
    offset: float = 0.0
    offset_other: float = 0.0
    t0: float = 0.0
    t1: float = 0.0
    # quadratic frame for horocycle arcs
    _X0: np.ndarray | None = field(default=None, repr=False)
    _W: np.ndarray | None = field(default=None, repr=False)
    _m: float = field(default=0.0, repr=False)

    def point_at(self, s):
        """Disk point at arclength s from p (vectorized)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "horocycle":
            L = ideal_vector(self.base)
            X = (
                self._X0
                + s[..., None] * self._W
                - (s**2 / (2.0 * self._m))[..., None] * L
            )
            return (X[..., 1] + 1j * X[..., 2]) / (1.0 + X[..., 0])
        t = self.t0 + np.sign(self.t1 - self.t0) * s / np.cosh(self.offset)
        return Hypercycle(self.axis, self.offset).point_at(t)

    def tangent_at(self, s):
        """Disk-chart velocity dz/ds (hyperbolic unit speed upstairs)."""
        s = float(s)
        if self.kind == "horocycle":
            L = ideal_vector(self.base)
            X = self._X0 + s * self._W - s**2 / (2.0 * self._m) * L
            dX = self._W - (s / self._m) * L
        else:
            sgn = np.sign(self.t1 - self.t0)
            t = self.t0 + sgn * s / np.cosh(self.offset)
            o, w = self.axis.frame
            u = self.axis.pole
            X = (o * np.cosh(t) + w * np.sinh(t)) * np.cosh(self.offset) + u * np.sinh(
                self.offset
            )
            dX = (o * np.sinh(t) + w * np.cosh(t)) * sgn
        z = (X[1] + 1j * X[2]) / (1.0 + X[0])
        return ((dX[1] + 1j * dX[2]) - z * dX[0]) / (1.0 + X[0])

    def euclidean_circle(self):
        """(center, radius) of the full supporting Euclidean circle."""
        if self.kind == "horocycle":
            return Horocycle(self.base, self.level).euclidean()
        return Hypercycle(self.axis, self.offset).euclidean()

    def chart_curvature(self) -> float:
        """|r|-parameter of the arc in a vertex-normalized corner chart:
        2 for horocycles, 2 tanh|offset| for hypercycles."""
        if self.kind == "horocycle":
            return 2.0
        return 2.0 * np.tanh(abs(self.offset))

    def signed_geodesic_curvature(self) -> float:
        """Geodesic curvature seen from the h-gon this arc bounds
        (travelling so the h-gon is on the left)."""
        if self.kind == "horocycle":
            return -1.0
        s = np.sign(self.offset)
        if s == 0.0:
            return 0.0
        k = np.tanh(abs(self.offset))
        return float(k if -s == np.sign(self.offset - self.offset_other) else -k)

    def reversed(self) -> "HArc":
        if self.kind == "horocycle":
            return _horo_arc(self.base, self.level, self.q, self.p)
        return _hyper_arc(
            self.axis, self.offset, self.offset_other, self.t1, self.t0, self.q, self.p
        )


def _horo_frame(p, base, toward=None):
    """(X0, W, m) of the unit-speed horocycle parametrization at p; W is
    signed toward `toward` when given."""
    L = ideal_vector(base)
    X0 = disk_to_hyperboloid(p)
    m = float(mink(X0, L))
    W = normalize_spacelike(mink_cross(X0, L))
    if toward is not None:
        if mink(disk_to_hyperboloid(toward), W) < 0:
            W = -W
    return X0, W, m


def _horo_arc(base, level, p, q) -> HArc:
    X0, W, m = _horo_frame(p, base, toward=q)
    length = float(mink(disk_to_hyperboloid(q), W))
    return HArc(
        kind="horocycle",
        p=p,
        q=q,
        length=length,
        base=base,
        level=level,
        _X0=X0,
        _W=W,
        _m=m,
    )


def _hyper_arc(axis, offset, offset_other, t0, t1, p, q) -> HArc:
    return HArc(
        kind="hypercycle",
        p=p,
        q=q,
        length=abs(t1 - t0) * float(np.cosh(offset)),
        axis=axis,
        offset=offset,
        offset_other=offset_other,
        t0=t0,
        t1=t1,
    )


# ---------------------------------------------------------------------------
# pieces


@dataclass
class HGon:
    """Compact piece around one spine vertex.

    corners[t] is the tangency foot on polygon side corner_sides[t];
    sides[t] runs from corners[t] to corners[t+1].  gap_arcs / chord_arcs
    index into `sides` by ideal vertex resp. spine edge.
    """

    face: int
    center: complex
    X: np.ndarray
    radius: float
    corners: list
    corner_sides: list
    sides: list
    gap_arcs: dict
    chord_arcs: dict

    @property
    def circumcircle(self) -> HypCircle:
        return HypCircle(self.center, self.radius)

    @property
    def k(self) -> int:
        return len(self.sides)

    def area(self) -> float:
        """Gauss-Bonnet with exterior angle pi at every tangency corner:
        A = k*pi - 2*pi + sum of signed k_g * length."""
        a = self.k * np.pi - 2.0 * np.pi
        for arc in self.sides:
            a += arc.signed_geodesic_curvature() * arc.length
        return float(a)

    def side_slacks(self, z):
        """Signed containment margins of z against every side's h-cycle
        (>= 0 for all sides iff z is in the h-gon, up to boundary)."""
        out = []
        for arc in self.sides:
            if arc.kind == "horocycle":
                # deeper toward the cusp = more negative level here
                out.append(float(busemann_level(arc.base, z)) - arc.level)
            else:
                y = float(Hypercycle(arc.axis, 0.0).coords_of(z)[1])
                out.append((y - arc.offset) * np.sign(arc.offset - arc.offset_other))
        return out


@dataclass
class Rectangle:
    """Flow rectangle over one spine edge (arc), in the Fermi chart of
    the common orthogeodesic `axis` of polygon sides arc[0], arc[1].

    The chart is [0, X] x [Y1, Y2]: x measured along the axis from the
    foot on side arc[0], y the signed offset.  faces[0] is the face at
    offset Y1 (bottom), faces[1] at Y2 (top).  left/right are the
    vertical geodesic boundary segments, contained in the polygon sides.
    """

    arc: tuple
    faces: tuple
    axis: Geodesic
    x0: float
    x1: float
    X: float
    Y1: float
    Y2: float
    bottom: HArc
    top: HArc
    left: tuple  # (side index, chart interval on that side, endpoints)
    right: tuple
    end_offsets: dict  # face -> (offset measured at x0 end, at x1 end)

    @property
    def height(self) -> float:
        return self.Y2 - self.Y1

    @property
    def width(self) -> float:
        """Length of the shortest horizontal leaf: the geodesic leaf if
        the axis crosses the rectangle, else the nearer hypercycle."""
        if self.Y1 <= 0.0 <= self.Y2:
            return self.X
        return self.X * float(np.cosh(min(abs(self.Y1), abs(self.Y2))))

    def coords(self, z):
        """Chart coordinates (x, y) of arbitrary disk points."""
        t, y = Hypercycle(self.axis, 0.0).coords_of(z)
        x = (t - self.x0) * np.sign(self.x1 - self.x0)
        return x, y

    def point(self, x, y):
        """Disk point of chart coordinates (vectorized)."""
        t = self.x0 + np.sign(self.x1 - self.x0) * np.asarray(x, dtype=float)
        return _fermi_point(self.axis, t, y)

    def contains(self, z, tol: float = 1e-9) -> bool:
        x, y = self.coords(z)
        return bool(
            (-tol <= x) & (x <= self.X + tol) & (self.Y1 - tol <= y) & (y <= self.Y2 + tol)
        )

    def area(self) -> float:
        return self.X * float(np.sinh(self.Y2) - np.sinh(self.Y1))


def _fermi_point(axis: Geodesic, t, y):
    """Disk point at axis-arclength t, signed normal offset y."""
    o, w = axis.frame
    u = axis.pole
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    X = (
        (o * np.cosh(t)[..., None] + w * np.sinh(t)[..., None]) * np.cosh(y)[..., None]
        + u * np.sinh(y)[..., None]
    )
    return (X[..., 1] + 1j * X[..., 2]) / (1.0 + X[..., 0])


@dataclass
class Spike:
    """Cusp piece at ideal vertex `vertex`: the horoball of `level` cut
    off by the owning h-gon's gap arc, bounded by two asymptotic rays
    inside polygon sides `sides` = (vertex-1, vertex)."""

    vertex: int
    base: float
    face: int
    level: float
    horo: HArc
    sides: tuple
    feet: tuple  # chart coordinates of the arc ends on the two sides
    ray_directions: tuple  # +1: increasing side chart toward the cusp

    def contains(self, z, polygon: IdealPolygon | None = None, tol: float = 1e-9):
        deep = float(busemann_level(self.base, z)) <= self.level + tol
        if polygon is None:
            return deep
        return deep and polygon.contains(z, slack=tol)

    def area(self) -> float:
        """Equals the bounding horocycle arc length."""
        return self.horo.length


# ---------------------------------------------------------------------------
# the decomposition


class Decomposition:
    """Tiling of an ideal polygon into h-gons, rectangles, and spikes."""

    def __init__(self, polygon, spine_tree, hgons, rectangles, spikes):
        self.polygon = polygon
        self.spine = spine_tree
        self.hgons = hgons
        self.rectangles = rectangles
        self.spikes = spikes
        self.adjacency = self._adjacency()

    def _adjacency(self):
        adj = {}

        def link(a, b):
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)

        for h in self.hgons:
            for k in h.gap_arcs:
                link(("hgon", h.face), ("spike", k))
            for a in h.chord_arcs:
                link(("hgon", h.face), ("rect", a))
        return {k: sorted(v) for k, v in adj.items()}

    def pieces(self):
        out = [("hgon", h.face) for h in self.hgons]
        out += [("rect", a) for a in sorted(self.rectangles)]
        out += [("spike", k) for k in sorted(self.spikes)]
        return out

    def piece_areas(self) -> dict:
        out = {}
        for h in self.hgons:
            out[("hgon", h.face)] = h.area()
        for a, r in self.rectangles.items():
            out[("rect", a)] = r.area()
        for k, s in self.spikes.items():
            out[("spike", k)] = s.area()
        return out

    def total_area(self) -> float:
        return float(sum(self.piece_areas().values()))

    def locate(self, z, tol: float = 1e-9):
        """Key of the piece containing the disk point z (boundary points
        resolve to rectangles first, then spikes, then h-gons)."""
        for a in sorted(self.rectangles):
            if self.rectangles[a].contains(z, tol=tol):
                return ("rect", a)
        for k in sorted(self.spikes):
            if self.spikes[k].contains(z, polygon=self.polygon, tol=tol):
                return ("spike", k)
        best, slack = None, -np.inf
        for h in self.hgons:
            s = min(h.side_slacks(z))
            if s > slack:
                best, slack = h.face, s
        if slack < -1e-6:
            raise GeometryError(f"point {z} is in no piece (slack {slack:.3e})")
        return ("hgon", best)


def _gap_arc(P: IdealPolygon, st: SpineTree, f: int, k: int) -> HArc:
    n = P.n
    i_prev, i_next = (k - 1) % n, k
    p = P.side(i_prev).point_at(st.foot(f, i_prev))
    q = P.side(i_next).point_at(st.foot(f, i_next))
    base = P.theta[k]
    la, lb = float(busemann_level(base, p)), float(busemann_level(base, q))
    # levels of deep feet cannot be resolved below e^|level| * (foot
    # position error), so the gate widens with depth
    lev_tol = max(1e-7, 1e-10 * np.exp(min(abs(la), 30.0)))
    if abs(la - lb) > lev_tol:
        raise GeometryError(
            f"gap {k}: tangency feet at different horocycle levels "
            f"({la:.6g} vs {lb:.6g})"
        )
    return _horo_arc(base, 0.5 * (la + lb), p, q)


def decompose(P: IdealPolygon, tol: Tolerances | None = None) -> Decomposition:
    """Cut P along the h-cycles dual to its spine."""
    tol = tol or P.tol
    st = spine(P, tol)
    sys = st.tree.system
    n = P.n

    # rectangles first: they fix the axis and the two offsets per edge,
    # which the adjacent h-gons' chord arcs then reuse verbatim.
    rects = {}
    for a in sys.arcs:
        i, j = a
        axis = geodesic_from_pole(mink_cross(P.inward_pole(i), P.inward_pole(j)))
        # the axis meets both sides orthogonally; its chart coordinates of
        # the two feet come from projecting the tangency feet, so no
        # separate orthogeodesic solve is needed
        f1, f2 = sys.arc_faces[a]
        hyp0 = Hypercycle(axis, 0.0)
        data = {}
        for f in (f1, f2):
            pi = P.side(i).point_at(st.foot(f, i))
            pj = P.side(j).point_at(st.foot(f, j))
            (ti, yi) = (float(v) for v in hyp0.coords_of(pi))
            (tj, yj) = (float(v) for v in hyp0.coords_of(pj))
            if abs(yi - yj) > 1e-7:
                raise GeometryError(
                    f"edge {a}: feet of face {f} at unequal offsets "
                    f"({yi:.6g} vs {yj:.6g})"
                )
            data[f] = (ti, tj, yi, yj, pi, pj)
        x0 = 0.5 * (data[f1][0] + data[f2][0])
        x1 = 0.5 * (data[f1][1] + data[f2][1])
        if abs(data[f1][0] - data[f2][0]) > 1e-7 or abs(data[f1][1] - data[f2][1]) > 1e-7:
            raise GeometryError(f"edge {a}: axis feet disagree between faces")
        off = {f: 0.5 * (data[f][2] + data[f][3]) for f in (f1, f2)}
        if off[f1] > off[f2]:
            f1, f2 = f2, f1
        y1, y2 = off[f1], off[f2]
        bottom = _hyper_arc(axis, y1, y2, x0, x1, data[f1][4], data[f1][5])
        top = _hyper_arc(axis, y2, y1, x0, x1, data[f2][4], data[f2][5])
        left = (i, (y1, y2), (data[f1][4], data[f2][4]))
        right = (j, (y1, y2), (data[f1][5], data[f2][5]))
        rects[a] = Rectangle(
            arc=a,
            faces=(f1, f2),
            axis=axis,
            x0=x0,
            x1=x1,
            X=abs(x1 - x0),
            Y1=y1,
            Y2=y2,
            bottom=bottom,
            top=top,
            left=left,
            right=right,
            end_offsets={f: (data[f][2], data[f][3]) for f in (f1, f2)},
        )

    hgons = []
    for face in sys.faces:
        f = face.index
        v = st.vertex(f)
        corners, corner_sides, sides = [], [], []
        gap_arcs, chord_arcs = {}, {}
        for idx, it in enumerate(face.items):
            if it[0] == "gap":
                k = it[1]
                arc = _gap_arc(P, st, f, k)
                gap_arcs[k] = idx
                enter_side = (k - 1) % n
            else:
                a, enter_side, exit_side = it[1], it[2], it[3]
                r = rects[a]
                base_arc = r.bottom if f == r.faces[0] else r.top
                arc = base_arc if enter_side == a[0] else base_arc.reversed()
                chord_arcs[a] = idx
            corners.append(arc.p)
            corner_sides.append(enter_side)
            sides.append(arc)
        if len(sides) < 3:
            raise GeometryError(f"face {f}: h-gon with fewer than 3 sides")
        for t in range(len(sides)):
            gap = abs(sides[t].q - sides[(t + 1) % len(sides)].p)
            if gap > 1e-7:
                raise GeometryError(f"face {f}: sides {t},{t+1} do not chain")
        hgons.append(
            HGon(
                face=f,
                center=v.center,
                X=v.X,
                radius=v.radius,
                corners=corners,
                corner_sides=corner_sides,
                sides=sides,
                gap_arcs=gap_arcs,
                chord_arcs=chord_arcs,
            )
        )

    spikes = {}
    for k in range(n):
        f = sys.ray_owner[k]
        h = hgons[f]
        arc = h.sides[h.gap_arcs[k]]
        i_prev, i_next = (k - 1) % n, k
        spikes[k] = Spike(
            vertex=k,
            base=P.theta[k],
            face=f,
            level=arc.level,
            horo=arc,
            sides=(i_prev, i_next),
            feet=(st.foot(f, i_prev), st.foot(f, i_next)),
            # side i_prev = (theta_{k-1}, theta_k) runs toward the cusp as
            # its chart parameter increases; side i_next the opposite way
            ray_directions=(1, -1),
        )

    return Decomposition(P, st, hgons, rects, spikes)


# ---------------------------------------------------------------------------
# h-gon metrics


def _chart_curvature_at(M: Mobius, tau, arc: HArc):
    """Signed r-parameter of the arc in the corner chart sending the
    corner to 0, measured against the common tangent direction tau."""
    s = arc.length
    pts = [arc.point_at(0.0), arc.point_at(0.5 * s), arc.point_at(s)]
    try:
        c, r = circle_through(*[complex(M.apply(z)) for z in pts])
    except GeometryError:
        return 0.0
    if not np.isfinite(r) or r > 1e7:
        return 0.0
    # circle through 0 with tangent tau there: center i/v * tau exactly
    return float((np.conj(tau) * c).imag / abs(c) ** 2)


def corner_divergence(H: HGon, t: int) -> float:
    """|r_in - r_out| of the two arcs meeting at corner t, read in the
    chart with the corner at the origin and the common tangent along the
    measuring direction."""
    k = len(H.sides)
    inc = H.sides[(t - 1) % k]
    out = H.sides[t]
    corner = out.p
    M = Mobius.disk_translation(corner).inv()
    tau = M.deriv(corner) * inc.tangent_at(inc.length)
    tau /= abs(tau)
    v_in = _chart_curvature_at(M, tau, inc)
    v_out = _chart_curvature_at(M, tau, out)
    return abs(v_in - v_out)


def _min_nonconsecutive_gap(H: HGon, samples: int = 33) -> float:
    k = len(H.sides)
    if k <= 3:
        return np.inf
    pts = []
    for arc in H.sides:
        s = np.linspace(0.0, arc.length, samples)
        pts.append(arc.point_at(s))
    best = np.inf
    for i in range(k):
        for j in range(i + 1, k):
            if (j - i) % k in (1, k - 1):
                continue
            d = dist(pts[i][:, None], pts[j][None, :])
            best = min(best, float(np.min(d)))
    return best


def hgon_metrics(H: HGon):
    """(radius, side lengths, corner divergences, min gap between
    non-consecutive sides)."""
    lengths = [arc.length for arc in H.sides]
    divs = [corner_divergence(H, t) for t in range(len(H.sides))]
    return H.radius, lengths, divs, _min_nonconsecutive_gap(H)


# ---------------------------------------------------------------------------
# compatible truncations


@dataclass
class Truncation:
    """Per-face corner-chart radii, compatible across every spine edge:
    the vertical leaf through one h-gon's cut continues to the other's."""

    tr: dict
    eps: float
    band: tuple
    residual: float


def compatible_truncation(
    P: IdealPolygon, eps: float, decomposition: Decomposition | None = None
) -> Truncation:
    """Propagate the corner-chart radius eps from face 0 over the spine.

    Across an edge with offsets (sigma_f, sigma_g) the removed arclengths
    satisfy a_g = a_f * cosh(sigma_g)/cosh(sigma_f): both cuts must lie on
    one vertical leaf of the rectangle chart.
    """
    D = decomposition or decompose(P)
    n = P.n
    C = truncation_band_factor(n)
    band = (eps / C, eps * C)
    if not eps > 0:
        raise GeometryError("eps must be positive")

    params = {0: float(eps)}
    order = [0]
    seen = {0}
    queue = [0]
    sys = D.spine.tree.system
    neighbors = {f: [] for f in range(len(sys.faces))}
    for a, (f1, f2) in sys.arc_faces.items():
        neighbors[f1].append((f2, a))
        neighbors[f2].append((f1, a))
    while queue:
        f = queue.pop(0)
        for g, a in neighbors[f]:
            if g in seen:
                continue
            r = D.rectangles[a]
            sf = r.Y1 if f == r.faces[0] else r.Y2
            sg = r.Y1 if g == r.faces[0] else r.Y2
            vf, vg = 2.0 * np.tanh(abs(sf)), 2.0 * np.tanh(abs(sg))
            a_f = corner_arclength(vf, params[f])
            a_g = a_f * np.cosh(sg) / np.cosh(sf)
            params[g] = float(corner_arclength_inv(vg, a_g))
            seen.add(g)
            order.append(g)
            queue.append(g)

    for f, e in params.items():
        if not (band[0] < e < band[1]):
            raise GeometryError(
                f"truncation parameter {e:.3g} at face {f} leaves the band "
                f"({band[0]:.3g}, {band[1]:.3g}); eps too large"
            )

    # truncatability: the two corner cuts on each h-gon side must not meet,
    # and the chart radius must stay well inside the vertex chart
    worst = np.inf
    for h in D.hgons:
        e = params[h.face]
        for arc in h.sides:
            removed = 2.0 * corner_arclength(arc.chart_curvature(), e)
            worst = min(worst, arc.length / removed)
        if e > 0.4:
            worst = min(worst, 0.4 / e)
    if worst <= 1.0:
        raise GeometryError(
            f"eps {eps:g} too large for truncatability; "
            f"try eps < {0.9 * eps * worst:.3g}"
        )

    # compatibility residual, re-measured with the per-end raw offsets
    residual = 0.0
    for a, r in D.rectangles.items():
        f, g = r.faces
        for end in (0, 1):
            sf = r.end_offsets[f][end]
            sg = r.end_offsets[g][end]
            xf = corner_arclength(2.0 * np.tanh(abs(sf)), params[f]) / np.cosh(sf)
            xg = corner_arclength(2.0 * np.tanh(abs(sg)), params[g]) / np.cosh(sg)
            residual = max(residual, abs(xf - xg))
    return Truncation(tr=params, eps=float(eps), band=band, residual=residual)
