"""Ideal polygons: residues, horogon chains, spines, and the inverse
spine problem.

An ideal polygon is stored as its vertex angles in strictly increasing
counterclockwise order; side i is the complete geodesic from vertex i to
vertex i+1 (mod n), so the interior lies on the left of each side.

Two coordinate systems recur throughout:

* side charts — every side carries the arclength coordinate of its
  geodesic frame (origin at the foot of the perpendicular from the disk
  center, increasing toward the side's terminal vertex).  Horogon
  crossings, spine feet, and shears are all signed arclengths in these
  charts.

* horocycle levels along a side — the Busemann level with respect to
  either ideal endpoint is an exact affine function of the side chart
  coordinate (slope +1 away from the endpoint).  This turns the horogon
  tangency conditions into affine recursions that we solve in closed
  form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from scipy.optimize import least_squares

from .hypcore import (
    DEFAULT_TOL,
    Geodesic,
    GeometryError,
    Horocycle,
    Mobius,
    Tolerances,
    dist,
    disk_to_hyperboloid,
    horocycle_arc_length,
    hyperboloid_to_disk,
    ideal_vector,
    mink,
    mink_cross,
    tangent_circle_poles,
)
from .ribbon import MetricRibbonTree

TWO_PI = 2.0 * np.pi

EMBEDDED = "embedded"
SELF_TANGENT = "self-tangent"
IMMERSED = "immersed"


class IdealPolygon:
    """n ideal vertices in strictly increasing counterclockwise order."""

    def __init__(self, vertices_theta, tol: Tolerances = DEFAULT_TOL):
        th = np.asarray(vertices_theta, dtype=float) % TWO_PI
        if th.size < 3:
            raise GeometryError("an ideal polygon needs at least 3 vertices")
        gaps = np.diff(np.concatenate([th, th[:1]])) % TWO_PI
        if np.any(gaps <= tol.geom):
            raise GeometryError("vertex angles must strictly increase "
                                "counterclockwise with positive gaps")
        if abs(gaps.sum() - TWO_PI) > 1e-9:
            raise GeometryError("vertex angles must wind once around the circle")
        self.theta = th
        self.n = th.size
        self.tol = tol
        self._sides = None
        self._kab = None

    def __repr__(self):
        return f"IdealPolygon({np.round(self.theta, 6).tolist()})"

    @property
    def sides(self):
        if self._sides is None:
            self._sides = [
                Geodesic(self.theta[i], self.theta[(i + 1) % self.n])
                for i in range(self.n)
            ]
        return self._sides

    def side(self, i) -> Geodesic:
        return self.sides[i % self.n]

    def inward_pole(self, i):
        """Unit spacelike normal of side i pointing into the polygon.

        The pole of a geodesic is positive on the left of the a -> b
        travel direction, which for counterclockwise vertex order is the
        interior.
        """
        return self.side(i).pole

    def inward_distance(self, i, z) -> float:
        """Signed distance from z to side i, positive inside."""
        X = disk_to_hyperboloid(z) if np.iscomplexobj(np.asarray(z)) else z
        return float(np.arcsinh(mink(X, self.inward_pole(i))))

    def contains(self, z, slack: float = 0.0) -> bool:
        return all(self.inward_distance(i, z) > -slack for i in range(self.n))

    def apply_mobius(self, m: Mobius) -> "IdealPolygon":
        return IdealPolygon(m.apply_angle(self.theta), tol=self.tol)

    def canonicalized(self) -> "IdealPolygon":
        """Normalize so vertices 0, 1, 2 sit at angles 0, pi/2, pi."""
        m = Mobius.canonical_normalizer(self.theta[0], self.theta[1],
                                        self.theta[2])
        q = self.apply_mobius(m)
        th = q.theta.copy()
        th[0] = 0.0
        return IdealPolygon(th, tol=self.tol)

    # -- exact side constants for horogon/residue algebra --------------

    def side_constants(self):
        """Per side i, the pair (ka_i, kb_i) with ka_i = log|<o_i, l(v_i)>|
        and kb_i = log|<o_i, l(v_{i+1})>|: the Busemann level of the side
        chart's origin with respect to either ideal endpoint."""
        if self._kab is None:
            ka = np.empty(self.n)
            kb = np.empty(self.n)
            for i, s in enumerate(self.sides):
                o, _ = s.frame
                ka[i] = np.log(abs(mink(o, ideal_vector(s.a))))
                kb[i] = np.log(abs(mink(o, ideal_vector(s.b))))
            self._kab = (ka, kb)
        return self._kab


def regular(n: int) -> IdealPolygon:
    if n < 3:
        raise GeometryError("need n >= 3")
    return IdealPolygon(TWO_PI * np.arange(n) / n)


def residue(P: IdealPolygon, orientation: int = 1) -> float:
    """Alternating sum of horocycle-truncated side lengths (even n).

    Truncating each vertex by any horoball, the sum of side-i truncated
    lengths with signs (-1)^i telescopes to an invariant; we evaluate it
    in closed form from the side constants.  orientation=-1 flips the
    sign convention (which vertex carries the + sign).
    """
    if P.n % 2 != 0:
        raise GeometryError("residue is defined only for even vertex counts")
    if orientation not in (1, -1):
        raise GeometryError("orientation must be +1 or -1")
    ka, kb = P.side_constants()
    signs = np.where(np.arange(P.n) % 2 == 0, 1.0, -1.0)
    return float(orientation * np.sum(signs * (ka + kb)))


# -- horogons -----------------------------------------------------------


@dataclass
class Horogon:
    """A horocycle at each vertex with consecutive pairs tangent.

    crossings[i] is the side-chart coordinate of the tangency point of
    horocycles i and i+1, which lies on side i.
    """

    polygon: IdealPolygon
    horocycles: list
    crossings: np.ndarray
    tangency_points: np.ndarray
    classification: str = field(default="")

    def side_lengths(self) -> np.ndarray:
        """Length of each horocyclic arc (arc i runs along the horocycle
        based at vertex i between its two tangency points)."""
        n = self.polygon.n
        out = np.empty(n)
        for i in range(n):
            p = self.tangency_points[(i - 1) % n]
            q = self.tangency_points[i]
            out[i] = horocycle_arc_length(p, q)
        return out

    def tangency_residuals(self) -> np.ndarray:
        """Signed gaps between consecutive horocycles (0 = exact tangency)."""
        from .hypcore import horocycle_gap
        n = self.polygon.n
        return np.array([
            horocycle_gap(self.horocycles[i], self.horocycles[(i + 1) % n])
            for i in range(n)
        ])


@dataclass
class HorogonResult:
    """Outcome of the horogon chain solve.

    status: "unique" (odd n), "family" (even n, zero residue; horogon
    anchored at the requested side-0 crossing), or "none" (even n,
    nonzero residue).  offset is the unsigned chain mismatch after one
    loop: the distance between the starting crossing and where the chain
    comes back, zero (to rounding) whenever a horogon exists.
    """

    status: str
    horogon: Horogon | None
    offset: float = 0.0

    def __bool__(self):
        return self.horogon is not None


def _chain_constants(P: IdealPolygon):
    """c_i such that a horocycle chain crossing side i at t must cross
    side i+1 at c_i - t."""
    ka, kb = P.side_constants()
    return kb - np.roll(ka, -1)


def _horogon_from_crossings(P: IdealPolygon, t: np.ndarray,
                            tol_tangent: float) -> Horogon:
    ka, _ = P.side_constants()
    levels = ka + t
    horos = [Horocycle(P.theta[i], float(levels[i])) for i in range(P.n)]
    pts = np.array([P.side(i).point_at(float(t[i])) for i in range(P.n)])
    h = Horogon(P, horos, t, pts)
    h.classification = classify_horogon(h, tol_tangent=tol_tangent)
    return h


def horogon(P: IdealPolygon, anchor: float = 0.0,
            res_tol: float = 1e-9, tol_tangent: float = 1e-6) -> HorogonResult:
    """Solve the horogon chain.

    Consecutive-tangency propagates crossings by the affine steps
    t_{i+1} = c_i - t_i.  Going once around composes to t -> A - t for
    odd n (unique fixed point A/2) and to t -> t + D for even n, where D
    vanishes exactly when the residue does; then every anchor value of
    the side-0 crossing gives a horogon (a 1-parameter family).
    """
    c = _chain_constants(P)
    n = P.n
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    if n % 2 == 1:
        t0 = float(np.sum(signs * c) / 2.0)
    else:
        drift = float(-np.sum(signs * c))
        if abs(drift) >= res_tol:
            return HorogonResult("none", None, offset=abs(drift))
        t0 = float(anchor)
    t = np.empty(n)
    t[0] = t0
    for i in range(n - 1):
        t[i + 1] = c[i] - t[i]
    h = _horogon_from_crossings(P, t, tol_tangent)
    status = "unique" if n % 2 == 1 else "family"
    closure = c[n - 1] - t[n - 1] - t[0]
    return HorogonResult(status, h, offset=abs(float(closure)))


def classify_horogon(h: Horogon, tol_tangent: float = 1e-6) -> str:
    """Pairwise analysis of the non-adjacent horocycles: all separated ->
    embedded; touching within tol_tangent (but never crossing) ->
    self-tangent; any transverse overlap -> immersed."""
    from .hypcore import horocycle_gap
    n = h.polygon.n
    min_gap = np.inf
    for i in range(n):
        for j in range(i + 2, n):
            if (j - i) % n in (1, n - 1):
                continue
            g = horocycle_gap(h.horocycles[i], h.horocycles[j])
            min_gap = min(min_gap, g)
    if min_gap < -tol_tangent:
        return IMMERSED
    if min_gap <= tol_tangent:
        return SELF_TANGENT
    return EMBEDDED


# -- spines -------------------------------------------------------------


@dataclass
class SpineVertex:
    center: complex
    radius: float
    sides: tuple
    X: np.ndarray
    face: int = -1


class SpineTree:
    """The cut locus of the boundary, as a decorated metric ribbon tree.

    tree: the underlying MetricRibbonTree (faces indexed consistently
    with `vertices`).  vertices[f] is the tangent-circle vertex realized
    by face f.  feet[arc][side] maps the two adjacent face ids to their
    tangency feet on that side; side_feet[i] lists (t, face) pairs in
    increasing chart order along side i.
    """

    def __init__(self, polygon, tree, vertices, feet, side_feet):
        self.polygon = polygon
        self.tree = tree
        self.vertices = vertices
        self.feet = feet
        self.side_feet = side_feet

    @property
    def n(self):
        return self.polygon.n

    @property
    def arcs(self):
        return self.tree.arcs

    def vertex(self, face: int) -> SpineVertex:
        return self.vertices[face]

    def foot(self, face: int, side: int) -> float:
        """Chart coordinate on `side` of the tangency foot of the vertex
        realized by `face`."""
        v = self.vertices[face]
        s = self.polygon.side(side)
        o, w = s.frame
        return float(np.arctanh(mink(v.X, w) / -mink(v.X, o)))

    def rad(self) -> float:
        return max(v.radius for v in self.vertices)

    def edge_weight_residual(self, arc) -> float:
        """Mismatch between the two side-projections of an edge."""
        i, j = arc
        f1, f2 = self.tree.system.arc_faces[arc]
        di = abs(self.foot(f1, i) - self.foot(f2, i))
        dj = abs(self.foot(f1, j) - self.foot(f2, j))
        return abs(di - dj)


def _foot_coord(X, side: Geodesic) -> float:
    # arcsinh form of the projection coordinate: arctanh of mw/mo loses
    # e^{2t} digits once the foot sits far along the geodesic
    o, w = side.frame
    g = mink(X, mink_cross(o, w))
    return float(np.arcsinh(mink(X, w) / np.sqrt(1.0 + g * g)))


def _face_circle(P: "IdealPolygon", sides, with_dists: bool = False):
    """Tangent circle (hyperboloid center, sinh radius) for three sides,
    solved in a frame that spreads one endpoint of each side to a
    standard position: the global-frame system loses ~1/gap^2 digits
    once two defining vertices nearly collide (deeply scaled spines).

    With with_dists, also return the signed distances from the center to
    every side of P, measured in the same frame (the global-frame
    distances of a deep center are too noisy to filter on).
    """
    from .hypcore import normalize_spacelike
    th = P.theta
    n = P.n
    i, j, k = sides[0], sides[1], sides[2]
    N = Mobius.canonical_normalizer(th[i], th[j], th[k])
    ang = N.apply_angle(th)

    def pole(s_):
        return normalize_spacelike(
            mink_cross(ideal_vector(ang[s_]), ideal_vector(ang[(s_ + 1) % n]))
        )

    Xl, s = tangent_circle_poles([pole(i), pole(j), pole(k)])
    X = N.inv().lorentz() @ Xl
    if not with_dists:
        return X, s
    ds = np.array([np.arcsinh(mink(Xl, pole(t))) for t in range(n)])
    return X, s, ds


def spine(P: IdealPolygon, tol: Tolerances | None = None) -> SpineTree:
    """Compute the spine: enumerate side triples, keep tangent circles
    whose defining sides are globally nearest, merge coincident centers,
    and connect consecutive tangency feet along each side."""
    tol = tol or P.tol
    n = P.n
    poles = [P.inward_pole(i) for i in range(n)]
    cands = []  # (X, s, side set)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                try:
                    X, s, ds = _face_circle(P, (i, j, k), with_dists=True)
                except GeometryError:
                    continue
                r = np.arcsinh(s)
                if np.all(ds >= r - 10 * tol.geom):
                    cands.append((X, float(r), {i, j, k}))
    if not cands:
        raise GeometryError("no spine vertices found")

    # merge candidates whose centers coincide within tol.merge
    merged = []  # (X, r, side set)
    for X, r, ss in cands:
        z = hyperboloid_to_disk(X)
        placed = False
        for m in merged:
            if dist(z, m[3]) < tol.merge:
                m[2].update(ss)
                placed = True
                break
        if not placed:
            merged.append([X, r, set(ss), z])

    vertices = []
    for X, r, ss, z in merged:
        ss = tuple(sorted(ss))
        if len(ss) > 3:
            # polish: least-squares tangent circle on the full side set;
            # merged candidates are coincident only to tol.merge, so the
            # fit residual is allowed at that scale too
            X, s = tangent_circle_poles([poles[i] for i in ss],
                                        resid_tol=tol.merge)
            r = float(np.arcsinh(s))
            z = hyperboloid_to_disk(X)
            resid = max(abs(np.arcsinh(mink(X, poles[i])) - r) for i in ss)
            if resid > 100 * tol.geom:
                raise GeometryError(
                    f"merged spine vertex has tangency residual {resid:.2e}")
        vertices.append(SpineVertex(z, r, ss, X))

    # feet along each side, edges between consecutive tangent vertices
    side_lists = {}
    for i in range(n):
        lst = []
        for vi, v in enumerate(vertices):
            if i in v.sides:
                lst.append((_foot_coord(v.X, P.side(i)), vi))
        lst.sort()
        side_lists[i] = lst

    edge_data = {}  # frozenset(vertex pair) -> per-side weights
    for i in range(n):
        lst = side_lists[i]
        for (t1, v1), (t2, v2) in zip(lst, lst[1:]):
            key = frozenset((v1, v2))
            edge_data.setdefault(key, []).append((i, t2 - t1, (v1, t1, v2, t2)))

    arcs = {}
    arc_of_pair = {}
    feet = {}
    for key, occurrences in edge_data.items():
        if len(occurrences) != 2:
            raise GeometryError(
                "spine edge not discovered on exactly two sides; "
                f"got sides {[o[0] for o in occurrences]}")
        (i, wi, fi), (j, wj, fj) = occurrences
        # feet of deep edges lose accuracy roughly like cosh(weight); a
        # genuine combinatorial mismatch disagrees at the O(weight) scale
        if abs(wi - wj) > 1e-8 * max(1.0, np.cosh(min(wi, 25.0))):
            raise GeometryError(
                f"edge projections disagree: {wi} vs {wj} on sides {i},{j}")
        a = (min(i, j), max(i, j))
        arcs[a] = 0.5 * (wi + wj)
        arc_of_pair[key] = a
        feet[a] = {i: {fi[0]: fi[1], fi[2]: fi[3]},
                   j: {fj[0]: fj[1], fj[2]: fj[3]}}

    tree = MetricRibbonTree(n, arcs)

    # match combinatorial faces to geometric vertices via tangent sides
    by_sides = {tuple(sorted(f.sides)): f.index for f in tree.faces}
    ordered = [None] * len(tree.faces)
    for vi, v in enumerate(vertices):
        fidx = by_sides.get(v.sides)
        if fidx is None:
            raise GeometryError(
                f"spine vertex tangent to sides {v.sides} does not match "
                "any region of its own dual arc system")
        v.face = fidx
        ordered[fidx] = v
    if any(v is None for v in ordered):
        raise GeometryError("face/vertex matching failed")

    # re-key feet by face id, and per-side feet in chart order
    feet_by_face = {}
    for a, per_side in feet.items():
        out = {}
        for s, d in per_side.items():
            out[s] = {vertices[vi].face: t for vi, t in d.items()}
        feet_by_face[a] = out

    side_feet = {
        i: [(t, vertices[vi].face) for t, vi in side_lists[i]]
        for i in range(n)
    }

    st = SpineTree(P, tree, ordered, feet_by_face, side_feet)

    # consistency: faces along each side appear in foot order
    for i in range(n):
        want = tree.system.side_faces[i]
        got = [f for _, f in side_feet[i]]
        if got != want:
            raise GeometryError(
                f"feet order on side {i} disagrees with the dual arc system")
    return st


def rad(P: IdealPolygon) -> float:
    """Largest distance from the boundary, attained at a spine vertex."""
    return spine(P).rad()


def waist(P: IdealPolygon) -> float:
    """Length of the shortest (possibly singular) leaf of the
    orthogeodesic foliation: minimize twice the boundary distance over
    the spine, in closed form on each edge segment."""
    st = spine(P)
    best = min(2.0 * v.radius for v in st.vertices)
    for arc, (f1, f2) in st.tree.system.arc_faces.items():
        X1, X2 = st.vertices[f1].X, st.vertices[f2].X
        # geodesic through the two centers
        from .hypcore import normalize_spacelike
        u = normalize_spacelike(mink_cross(X1, X2))
        O = np.array([1.0, 0.0, 0.0])
        o = O - mink(O, u) * u
        o = o / np.sqrt(-mink(o, o))
        w = mink_cross(u, o)
        # the centers lie on the geodesic, so their coordinates are plain
        # arcsinh of the tangent pairing (no arctanh cancellation)
        t1 = float(np.arcsinh(mink(X1, w)))
        t2 = float(np.arcsinh(mink(X2, w)))
        lo, hi = min(t1, t2), max(t1, t2)
        i = arc[0]
        ui = P.inward_pole(i)
        a, b = mink(o, ui), mink(w, ui)
        vals = [abs(a * np.cosh(lo) + b * np.sinh(lo)),
                abs(a * np.cosh(hi) + b * np.sinh(hi))]
        if abs(b) < abs(a):
            tc = np.arctanh(-b / a)
            if lo <= tc <= hi:
                vals.append(np.sqrt(a * a - b * b))
        best = min(best, 2.0 * float(np.arcsinh(min(vals))))
    return best


# -- inverse spine problem ---------------------------------------------


def _fan_points(x: np.ndarray, n: int) -> np.ndarray:
    """Boundary points of the fan-shear chart: xi_0 = inf (returned as
    np.inf), xi_1 = 0, xi_2 = 1, then xi_{k+1} = xi_k + e^{x}(xi_k -
    xi_{k-1})."""
    xi = np.empty(n)
    xi[0] = np.inf
    xi[1] = 0.0
    xi[2] = 1.0
    for k in range(2, n - 1):
        xi[k + 1] = xi[k] + np.exp(x[k - 2]) * (xi[k] - xi[k - 1])
    return xi


def _angles_from_fan(xi: np.ndarray) -> np.ndarray:
    """Cayley transform of upper-half-plane boundary points to circle
    angles: xi -> (xi - i)/(xi + i)."""
    th = np.empty(xi.size)
    for k, v in enumerate(xi):
        if np.isinf(v):
            th[k] = 0.0
        else:
            th[k] = np.angle((v - 1j) / (v + 1j)) % TWO_PI
    return th


def _fan_shears_of(thetas: np.ndarray) -> np.ndarray:
    """Inverse of _fan_points for an existing polygon: map vertices
    0,1,2 to inf,0,1 and read off the shear of each fan diagonal."""
    z = np.exp(1j * np.asarray(thetas))
    z0, z1, z2 = z[0], z[1], z[2]

    def to_line(w):
        num = (w - z1) * (z2 - z0)
        den = (w - z0) * (z2 - z1)
        return np.real(num / den)

    xi = np.array([np.inf if k == 0 else to_line(z[k])
                   for k in range(z.size)])
    n = z.size
    return np.array([
        np.log((xi[k + 1] - xi[k]) / (xi[k] - xi[k - 1]))
        for k in range(2, n - 1)
    ])


def from_spine(T: MetricRibbonTree, rel_tol: float = 1e-6,
               verify: bool = True, seed_shears: np.ndarray | None = None
               ) -> IdealPolygon:
    """Numerically invert the spine map: find the ideal polygon whose
    spine realizes the given metric ribbon tree.

    Coordinates are the n-3 shears of a fan triangulation (a global,
    unconstrained chart on the space of marked n-gons).  The residual
    system imposes, per tree vertex, tangency of the extra sides to the
    circle through its first three tangent sides, and per finite edge
    the prescribed signed gap between the two adjacent vertices' feet.
    The counts balance to an (n-3)-square system, solved by
    Levenberg-Marquardt (damped Newton) seeded at the regular polygon.
    """
    n = T.n
    sysm = T.system
    m = n - 3

    face_sides = [f.sides for f in T.faces]
    arc_list = sorted(T.arcs)
    # for each arc pick its smaller side; the two adjacent faces in
    # chart order along that side
    arc_rows = []
    for a in arc_list:
        i = a[0]
        f1, f2 = sysm.arc_faces[a]
        seq = sysm.side_faces[i]
        pos = {f: p for p, f in enumerate(seq)}
        first, second = (f1, f2) if pos[f1] < pos[f2] else (f2, f1)
        arc_rows.append((a, i, first, second))

    def build(x):
        return IdealPolygon(_angles_from_fan(_fan_points(x, n)))

    def residuals(x):
        # any geometric degeneracy met during the line search (colliding
        # vertices, sides without a common circle) is a penalty wall
        try:
            P = build(x)
            poles = [P.inward_pole(i) for i in range(n)]
            out = []
            centers = {}
            for f, ss in enumerate(face_sides):
                X, s = _face_circle(P, ss[:3])
                centers[f] = (X, np.arcsinh(s))
                r = centers[f][1]
                for extra in ss[3:]:
                    out.append(np.arcsinh(mink(X, poles[extra])) - r)
            for a, i, first, second in arc_rows:
                s = P.side(i)
                t1 = _foot_coord(centers[first][0], s)
                t2 = _foot_coord(centers[second][0], s)
                out.append((t2 - t1) - T.arcs[a])
        except GeometryError:
            return np.full(max(m, 1), 1e6)
        if m == 0:
            return np.zeros(1)
        return np.asarray(out)

    if m == 0:
        return build(np.zeros(0)).canonicalized()

    if seed_shears is not None:
        x0 = np.asarray(seed_shears, dtype=float)
    else:
        x0 = _fan_shears_of(regular(n).theta)
    # shears of symmetric seeds come out as 1e-16 noise; finite-difference
    # steps are scaled by max(1, |x|) only under trf, and a relative step
    # on a 1e-16 coordinate would freeze it entirely
    x0 = np.where(np.abs(x0) < 1e-12, 0.0, x0)
    sol = least_squares(residuals, x0, method="trf", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=400 * (m + 1))
    res_norm = float(np.max(np.abs(sol.fun)))
    # the default finite-difference step sits at the residual noise floor
    # for deeply scaled trees; polish with coarser steps, keeping the best
    for step in (1e-6, 1e-4):
        if res_norm <= 1e-9:
            break
        sol2 = least_squares(residuals, sol.x, method="trf", jac="3-point",
                             diff_step=step, xtol=1e-15, ftol=1e-15,
                             gtol=1e-15, max_nfev=400 * (m + 1))
        if float(np.max(np.abs(sol2.fun))) < res_norm:
            sol = sol2
            res_norm = float(np.max(np.abs(sol.fun)))
    P = build(sol.x).canonicalized()
    if verify:
        gate = 1e-7
        if res_norm > gate:
            # deeply scaled trees evaluate their residuals with heavy
            # cancellation; measure the evaluation noise at the solution
            # and accept a residual that sits inside it
            base = residuals(sol.x)
            jig = 1e-11 * max(1.0, float(np.max(np.abs(sol.x))))
            spread = 0.0
            for d in (jig, -jig):
                for idx in range(m):
                    xp = sol.x.copy()
                    xp[idx] += d
                    spread = max(spread, float(np.max(np.abs(residuals(xp) - base))))
            gate = max(gate, min(1e-5, 10.0 * spread))
        if res_norm > gate:
            raise GeometryError(
                f"spine inversion did not converge: max residual {res_norm:.3e}"
                f" after {sol.nfev} evaluations")
        st = spine(P)
        if set(st.tree.arcs) != set(T.arcs):
            raise GeometryError(
                "spine inversion converged to a different combinatorial type: "
                f"{sorted(st.tree.arcs)} vs {sorted(T.arcs)}")
        for a, w in T.arcs.items():
            got = st.tree.arcs[a]
            # a weight w is the gap between feet that collide like e^{-w},
            # so re-measuring it through the spine loses ~cosh(w) digits
            if abs(got - w) > rel_tol * max(1.0, np.cosh(min(abs(w), 25.0))):
                raise GeometryError(
                    f"edge {a}: requested weight {w}, realized {got}")
    return P


def scale_polygon(P: IdealPolygon, L: float) -> IdealPolygon:
    """Polygon whose spine is L times the spine of P."""
    if L <= 0:
        raise GeometryError("scale factor must be positive")
    st = spine(P)
    if not st.tree.arcs:
        return P.canonicalized()
    T = st.tree
    try:
        return from_spine(T.scaled(L))
    except GeometryError:
        pass
    # far scalings start too far from the regular-polygon seed for the
    # solver; continue from P, warm-starting each solve with the previous
    # stage's shears and splitting the factor at the geometric midpoint
    # whenever a stage fails to converge
    return _continue_scale(T, P, 1.0, L, depth=8)


def _continue_scale(T, seed: IdealPolygon, f_seed: float, f_goal: float,
                    depth: int) -> IdealPolygon:
    try:
        return from_spine(T.scaled(f_goal),
                          seed_shears=_fan_shears_of(seed.theta))
    except GeometryError:
        if depth <= 0:
            raise
    mid = float(np.sqrt(f_seed * f_goal))
    Q = _continue_scale(T, seed, f_seed, mid, depth - 1)
    return _continue_scale(T, Q, mid, f_goal, depth - 1)
