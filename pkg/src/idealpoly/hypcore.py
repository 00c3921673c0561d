"""Poincare disk primitives backed by hyperboloid-model linear algebra.

Conventions used throughout the package:

* interior points are complex numbers in the open unit disk,
* ideal points are angles (radians) on the circle at infinity,
* the hyperboloid model lives in R^{2,1} with coordinates (x0, x1, x2)
  and pairing <X, Y> = x1 y1 + x2 y2 - x0 y0.

Routing metric queries through the hyperboloid keeps everything linear:
a geodesic is a spacelike unit "pole" vector u with sinh(signed dist) =
<X, u>, an ideal point is the lightlike ray (1, cos t, sin t), and the
Busemann level of a point P at base t is log(-<P, l(t)>), normalized so
the horocycle through the disk center has level 0.  Near-boundary
distances use log forms to avoid catastrophic cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass
class Tolerances:
    """Numeric tolerances shared by the geometric predicates."""

    geom: float = 1e-9        # generic predicate tolerance
    merge: float = 1e-7       # spine vertex merge radius
    tangent: float = 1e-6     # horocycle tangency band


DEFAULT_TOL = Tolerances()


class GeometryError(ValueError):
    """Raised when a geometric operation has no valid answer."""


# ---------------------------------------------------------------------------
# model conversions


def ideal_vector(theta):
    """Lightlike vector (1, cos t, sin t) of an ideal point; vectorized."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.shape + (3,))
    out[..., 0] = 1.0
    out[..., 1] = np.cos(theta)
    out[..., 2] = np.sin(theta)
    return out


def disk_to_hyperboloid(z):
    z = np.asarray(z, dtype=complex)
    r2 = z.real**2 + z.imag**2
    denom = 1.0 - r2
    if np.any(denom <= 0):
        raise GeometryError("point not strictly inside the unit disk")
    out = np.empty(z.shape + (3,))
    out[..., 0] = (1.0 + r2) / denom
    out[..., 1] = 2.0 * z.real / denom
    out[..., 2] = 2.0 * z.imag / denom
    return out


def hyperboloid_to_disk(X):
    X = np.asarray(X, dtype=float)
    return (X[..., 1] + 1j * X[..., 2]) / (1.0 + X[..., 0])


def mink(X, Y):
    """Minkowski pairing, broadcasting over leading axes."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return X[..., 1] * Y[..., 1] + X[..., 2] * Y[..., 2] - X[..., 0] * Y[..., 0]


def mink_cross(X, Y):
    """Vector W with <W, Z> = det(X, Y, Z); dual of the Euclidean cross."""
    c = np.cross(X, Y)
    c = np.asarray(c, dtype=float)
    out = c.copy()
    out[..., 0] = -c[..., 0]
    return out


def normalize_spacelike(u):
    n2 = mink(u, u)
    if np.any(n2 <= 0):
        raise GeometryError("vector is not spacelike")
    return u / np.sqrt(n2)[..., None]


def normalize_timelike(X):
    n2 = -mink(X, X)
    if np.any(n2 <= 0):
        raise GeometryError("vector is not timelike")
    X = X / np.sqrt(n2)[..., None]
    # keep the future sheet
    sign = np.where(X[..., 0] < 0, -1.0, 1.0)
    return X * sign[..., None]


# ---------------------------------------------------------------------------
# distances


def dist(p, q):
    """Hyperbolic distance between disk points, stable near the boundary.

    Uses d = 2 log(|1 - conj(p) q| + |p - q|) - log(1-|p|^2) - log(1-|q|^2),
    which follows from |1 - conj(p) q|^2 - |p - q|^2 = (1-|p|^2)(1-|q|^2).
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    a = np.abs(1.0 - np.conj(p) * q)
    b = np.abs(p - q)
    mp = 1.0 - (p.real**2 + p.imag**2)
    mq = 1.0 - (q.real**2 + q.imag**2)
    if np.any(mp <= 0) or np.any(mq <= 0):
        raise GeometryError("dist: point not strictly inside the disk")
    return 2.0 * np.log(a + b) - np.log(mp) - np.log(mq)


def busemann_level(theta, p):
    """Busemann level of p at ideal base theta; 0 on the horocycle
    through the disk center, decreasing toward the base."""
    P = disk_to_hyperboloid(p)
    val = -mink(P, ideal_vector(theta))
    return np.log(val)


def busemann(theta, p, q):
    """Cocycle beta_theta(p, q) = level(q) - level(p)."""
    return busemann_level(theta, q) - busemann_level(theta, p)


# ---------------------------------------------------------------------------
# geodesics


class Geodesic:
    """Complete geodesic with ideal endpoints a, b (angles in radians).

    The pair is stored ordered; the order fixes an arclength chart whose
    origin is the foot of the perpendicular from the disk center and
    whose positive direction points at endpoint b.  The pole `u` is the
    spacelike unit normal with mink_cross(l(a), l(b)) orientation; the
    positive side (sinh of signed distance = <X, u>) is the right-hand
    side when traveling from a to b.
    """

    __slots__ = ("a", "b", "_pole", "_frame")

    def __init__(self, a: float, b: float):
        if abs((a - b) % TWO_PI) < 1e-14:
            raise GeometryError("geodesic endpoints coincide")
        self.a = float(a)
        self.b = float(b)
        self._pole = None
        self._frame = None

    def __repr__(self):
        return f"Geodesic({self.a:.6f}, {self.b:.6f})"

    def _half_angles(self):
        # cross products of the two endpoint vectors lose all digits once
        # the gap shrinks below eps^(1/3); the half-gap d and midpoint s
        # give every frame vector in closed form, exact at any depth
        g = math.remainder(self.b - self.a, TWO_PI)
        d = 0.5 * g
        s = self.a + d
        return d, s

    @property
    def pole(self):
        if self._pole is None:
            d, s = self._half_angles()
            sd = np.sin(d)
            self._pole = np.array([np.cos(d), np.cos(s), np.sin(s)]) / -sd
        return self._pole

    @property
    def frame(self):
        """(o, w) with o = hyperboloid foot of the disk center, w = unit
        tangent at o pointing toward endpoint b."""
        if self._frame is None:
            d, s = self._half_angles()
            sd, cd = np.sin(d), np.cos(d)
            cs, ss = np.cos(s), np.sin(s)
            o = np.array([1.0, cd * cs, cd * ss]) / abs(sd)
            w = np.array([0.0, -ss, cs]) * np.sign(sd)
            self._frame = (o, w)
        return self._frame

    def reversed(self):
        return Geodesic(self.b, self.a)

    def point_at(self, t):
        """Disk point at signed arclength t in the chart."""
        o, w = self.frame
        t = np.asarray(t, dtype=float)
        X = o * np.cosh(t)[..., None] + w * np.sinh(t)[..., None]
        return hyperboloid_to_disk(X)

    def coord_of(self, p):
        """Arclength coordinate of a point assumed on (or projected to)
        the geodesic."""
        P = disk_to_hyperboloid(p)
        o, w = self.frame
        # project out the normal component so slightly-off points are fine
        s = mink(P, w)
        c = -mink(P, o)
        return np.arcsinh(s / np.sqrt(np.maximum(c**2 - s**2, 1e-300)))

    def signed_dist(self, p):
        """Signed distance to the geodesic, positive on the pole side."""
        P = disk_to_hyperboloid(p)
        return np.arcsinh(mink(P, self.pole))

    def closest_point(self, p):
        return self.point_at(self.coord_of(p))

    def euclidean_circle(self):
        """(center, radius) of the Euclidean realization; radius=inf for
        a diameter (returned as (direction, inf))."""
        za, zb = np.exp(1j * self.a), np.exp(1j * self.b)
        s = za + zb
        denom = abs(s) ** 2
        if denom < 1e-24:
            return (za, np.inf)  # diameter through za
        c = 2.0 * s / denom
        r = np.sqrt(abs(c) ** 2 - 1.0)
        return (c, r)


def geodesic_angle_cos(g1: Geodesic, g2: Geodesic):
    """<u1, u2> for the (oriented) poles."""
    return mink(g1.pole, g2.pole)


def geodesic_from_pole(w) -> Geodesic:
    """Geodesic {<X, w> = 0}, oriented so its pole is +w (normalized).

    Any spacelike w works: with w normalized, hypot(w1, w2)^2 = 1 + w0^2,
    so the endpoint equation cos(phi - alpha) = w0 / hypot(w1, w2) always
    has two solutions.
    """
    w = normalize_spacelike(np.asarray(w, dtype=float))
    rho = np.hypot(w[1], w[2])
    alpha = np.arctan2(w[2], w[1])
    beta = np.arccos(np.clip(w[0] / rho, -1.0, 1.0))
    g = Geodesic(alpha - beta, alpha + beta)
    if mink(g.pole, w) < 0.0:
        g = Geodesic(g.b, g.a)
    return g


def geodesic_distance(g1: Geodesic, g2: Geodesic, tol: Tolerances = DEFAULT_TOL):
    """Distance between two disjoint geodesics with the orthogeodesic feet.

    Returns (distance, foot1, foot2).  Asymptotic geodesics (a shared
    ideal endpoint) give (0.0, None, None).  Crossing geodesics raise.
    """
    k = mink(g1.pole, g2.pole)
    if abs(k) < 1.0 - 1e-12:
        raise GeometryError("geodesics cross; no orthogeodesic")
    shared = any(
        abs((x - y) % TWO_PI) < tol.geom or abs((x - y) % TWO_PI) > TWO_PI - tol.geom
        for x in (g1.a, g1.b)
        for y in (g2.a, g2.b)
    )
    if shared or abs(k) <= 1.0 + 1e-12:
        return 0.0, None, None
    d = float(np.arccosh(abs(k)))
    w = normalize_spacelike(mink_cross(g1.pole, g2.pole))
    f1 = normalize_timelike(mink_cross(g1.pole, w))
    f2 = normalize_timelike(mink_cross(g2.pole, w))
    return d, hyperboloid_to_disk(f1), hyperboloid_to_disk(f2)


def opposite_point(p, g1: Geodesic, g2: Geodesic):
    """Mirror image of p under the unique reflection interchanging the
    disjoint geodesics g1, g2."""
    u1, u2 = g1.pole, g2.pole
    if mink(u1, u2) > 0:
        u2 = -u2
    k = mink(u1, u2)  # now -cosh(d)
    if k >= -1.0 + 1e-12:
        raise GeometryError("opposite_point needs disjoint geodesics")
    b = (u1 - u2) / np.sqrt(2.0 - 2.0 * k)
    P = disk_to_hyperboloid(p)
    R = P - 2.0 * mink(P, b)[..., None] * b
    return hyperboloid_to_disk(R)


# ---------------------------------------------------------------------------
# horocycles, hypercycles, circles


@dataclass
class Horocycle:
    """Horocycle with ideal base point and Busemann level (0 = through
    the disk center, negative = deeper toward the base)."""

    base: float
    level: float

    def euclidean(self):
        """(center, radius) of the Euclidean circle, tangent to the unit
        circle at the base; rho = 1/(1 + exp(-level))."""
        rho = 1.0 / (1.0 + np.exp(-self.level))
        xi = np.exp(1j * self.base)
        return ((1.0 - rho) * xi, rho)

    def level_residual(self, p):
        return busemann_level(self.base, p) - self.level

    def deepest_point(self):
        """The point of the horocycle farthest from the base (on the
        diameter through the base)."""
        r = -np.tanh(self.level / 2.0)
        return r * np.exp(1j * self.base)


def horocycle_through(base_theta: float, p) -> Horocycle:
    return Horocycle(base_theta, float(busemann_level(base_theta, p)))


def horocycle_gap(h1: Horocycle, h2: Horocycle) -> float:
    """Signed gap between two horoballs at distinct bases: positive =
    disjoint by that distance, zero = tangent, negative = overlap."""
    g = Geodesic(h1.base, h2.base)
    o, w = g.frame
    l1, l2 = ideal_vector(h1.base), ideal_vector(h2.base)
    # level along g toward h1.base: log(-<o,l1>) - t ; toward h2.base: ... + t
    k1 = np.log(-mink(o, l1))
    k2 = np.log(-mink(o, l2))
    # boundary of ball 1 at t1 (ball is t >= t1 toward base a side): careful
    # with chart direction: g runs a=h1.base -> b=h2.base, so level at base
    # h1 is k1 + t and at h2 it is k2 - t.
    t1 = h1.level - k1          # ball1 = {t <= t1}
    t2 = k2 - h2.level          # ball2 = {t >= t2}
    return float(t2 - t1)


def intersect_horocycle_geodesic(h: Horocycle, g: Geodesic, tol=1e-12):
    """Arclength coordinates (in g's chart) of the intersection points.

    Returns a list of 0, 1 or 2 floats, sorted.  If the base of h is an
    endpoint of g the intersection is a single transversal point.
    """
    o, w = g.frame
    l = ideal_vector(h.base)
    A = -mink(o, l)
    B = -mink(w, l)
    target = np.exp(h.level)
    if abs(A) - abs(B) < tol * abs(A):
        # base is an endpoint of g: level is affine with slope sign(B),
        # since A cosh t + B sinh t = A e^{±t} when B = ±A
        s = 1.0 if B > 0 else -1.0
        t = s * (np.log(target) - np.log(A))
        return [float(t)]
    C = np.sqrt(A * A - B * B)
    t0 = float(np.arctanh(-B / A))
    val = target / C
    if val < 1.0 - 1e-15:
        return []
    if val <= 1.0:
        return [t0]
    dt = float(np.arccosh(val))
    return [t0 - dt, t0 + dt]


def tangent_horocycle(h: Horocycle, g: Geodesic) -> Horocycle:
    """Horocycle based at the other endpoint of g through g ∩ h.

    Preconditions: the base of h is one endpoint of g.  The returned
    horocycle is tangent to h at the (unique) intersection point.
    """
    ends = [g.a, g.b]
    d0 = abs((g.a - h.base) % TWO_PI)
    d1 = abs((g.b - h.base) % TWO_PI)
    d0 = min(d0, TWO_PI - d0)
    d1 = min(d1, TWO_PI - d1)
    if min(d0, d1) > 1e-9:
        raise GeometryError("tangent_horocycle: base is not an endpoint of g")
    other = ends[0] if d1 < d0 else ends[1]
    ts = intersect_horocycle_geodesic(h, g)
    if len(ts) != 1:
        raise GeometryError("tangent_horocycle: expected a single crossing")
    x = g.point_at(ts[0])
    return horocycle_through(other, x)


@dataclass
class Hypercycle:
    """Equidistant curve: points at signed offset y from the axis, where
    the sign is measured against the axis pole (<X, pole> = sinh y)."""

    axis: Geodesic
    offset: float

    def point_at(self, t):
        """Disk point over axis-arclength t (chart of the axis)."""
        o, w = self.axis.frame
        u = self.axis.pole
        t = np.asarray(t, dtype=float)
        X = (o * np.cosh(t)[..., None] + w * np.sinh(t)[..., None]) * np.cosh(
            self.offset
        ) + u * np.sinh(self.offset)
        return hyperboloid_to_disk(X)

    def coords_of(self, p):
        """(t, y) flow coordinates of an arbitrary disk point: y = signed
        offset, t = axis arclength of the vertical projection."""
        P = disk_to_hyperboloid(p)
        u = self.axis.pole
        o, w = self.axis.frame
        y = np.arcsinh(mink(P, u))
        O = (P - np.sinh(y)[..., None] * u) / np.cosh(y)[..., None]
        s = mink(O, w)
        c = -mink(O, o)
        t = np.arcsinh(s / np.sqrt(np.maximum(c**2 - s**2, 1e-300)))
        return t, y

    def arclength(self, t0, t1):
        return abs(t1 - t0) * np.cosh(self.offset)

    def curvature(self):
        return abs(np.tanh(self.offset))

    def euclidean(self):
        """(center, radius) of the Euclidean circular arc through the
        axis endpoints at this offset."""
        p0 = self.point_at(0.0)
        za, zb = np.exp(1j * self.axis.a), np.exp(1j * self.axis.b)
        return circle_through(za, zb, p0)


@dataclass
class HypCircle:
    """Metric circle: hyperbolic center and radius."""

    center: complex
    radius: float

    def euclidean(self):
        t = np.tanh(self.radius / 2.0)
        c = self.center
        m2 = abs(c) ** 2
        denom = 1.0 - t * t * m2
        return (c * (1.0 - t * t) / denom, t * (1.0 - m2) / denom)

    def contains(self, p, tol=0.0):
        return dist(self.center, p) <= self.radius + tol


def circle_through(z1, z2, z3):
    """Euclidean circle through three points: (center, radius).

    Raises GeometryError for (numerically) collinear triples.
    """
    ax, ay = z1.real, z1.imag
    bx, by = z2.real, z2.imag
    cx, cy = z3.real, z3.imag
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-15 * max(1.0, abs(z1 - z2) * abs(z2 - z3)):
        raise GeometryError("circle_through: collinear points")
    a2, b2, c2 = abs(z1) ** 2, abs(z2) ** 2, abs(z3) ** 2
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    center = ux + 1j * uy
    return center, abs(z1 - center)


# ---------------------------------------------------------------------------
# Mobius transformations


class Mobius:
    """Complex Mobius transformation as a 2x2 matrix (det-normalized).

    The same class represents disk automorphisms and chart maps such as
    disk -> upper half plane; `apply` acts on complex arrays and treats
    infinity gracefully through the projective formula.
    """

    __slots__ = ("m",)

    def __init__(self, m):
        m = np.asarray(m, dtype=complex)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) < 1e-300:
            raise GeometryError("singular Mobius matrix")
        self.m = m / np.sqrt(det)

    def __repr__(self):
        return f"Mobius({self.m.tolist()})"

    def apply(self, z):
        z = np.asarray(z, dtype=complex)
        a, b = self.m[0]
        c, d = self.m[1]
        num = a * z + b
        den = c * z + d
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den
        if np.isscalar(z) or z.ndim == 0:
            if not np.isfinite(out):
                return np.inf
        return out

    def __call__(self, z):
        return self.apply(z)

    def apply_angle(self, theta):
        """Image angle of an ideal point for disk automorphisms."""
        w = self.apply(np.exp(1j * np.asarray(theta, dtype=float)))
        a = np.angle(w) % TWO_PI
        return np.where(a > TWO_PI - 1e-12, 0.0, a)

    def deriv(self, z):
        """Complex derivative det / (cz + d)^2 (matrix is det-normalized)."""
        c, d = self.m[1]
        return 1.0 / (c * np.asarray(z, dtype=complex) + d) ** 2

    def inv(self):
        a, b = self.m[0]
        c, d = self.m[1]
        return Mobius(np.array([[d, -b], [-c, a]]))

    def compose(self, other: "Mobius") -> "Mobius":
        """self after other: (self∘other)(z) = self(other(z))."""
        return Mobius(self.m @ other.m)

    def lorentz(self) -> np.ndarray:
        """3x3 matrix of the induced isometry on the hyperboloid, in the
        (time, x, y) basis.  Only meaningful for disk automorphisms.

        A point X corresponds to the Hermitian form
        [[X0, X1 + iX2], [X1 - iX2, X0]]; the group acts by g H g*.
        """
        g = self.m
        basis = (
            np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex),
            np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
            np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex),
        )
        cols = []
        for H in basis:
            Hp = g @ H @ g.conj().T
            cols.append([Hp[0, 0].real, Hp[0, 1].real, Hp[0, 1].imag])
        return np.array(cols).T

    @staticmethod
    def identity():
        return Mobius(np.eye(2))

    @staticmethod
    def rotation(phi):
        return Mobius(np.array([[np.exp(1j * phi / 2), 0], [0, np.exp(-1j * phi / 2)]]))

    @staticmethod
    def disk_translation(a):
        """Disk automorphism sending 0 to a (and -a to 0): z -> (z+a)/(1+conj(a)z)."""
        a = complex(a)
        if abs(a) >= 1:
            raise GeometryError("translation target outside the disk")
        return Mobius(np.array([[1.0, a], [np.conj(a), 1.0]]))

    @staticmethod
    def _cross_matrix(z1, z2, z3):
        # z -> cross ratio (z-z1)(z2-z3) / ((z-z3)(z2-z1)), matrix form;
        # supports one of the z's at infinity.
        if z1 is np.inf:
            return np.array([[0.0, z2 - z3], [1.0, -z3]], dtype=complex)
        if z2 is np.inf:
            return np.array([[1.0, -z1], [1.0, -z3]], dtype=complex)
        if z3 is np.inf:
            return np.array([[1.0, -z1], [0.0, z2 - z1]], dtype=complex)
        return np.array(
            [[z2 - z3, -z1 * (z2 - z3)], [z2 - z1, -z3 * (z2 - z1)]], dtype=complex
        )

    @staticmethod
    def from_triples(src, dst) -> "Mobius":
        """Mobius sending the three points src[i] to dst[i] (np.inf allowed)."""
        A = Mobius._cross_matrix(*src)
        B = Mobius._cross_matrix(*dst)
        return Mobius(np.linalg.inv(B) @ A)

    @staticmethod
    def from_boundary_angles(src_angles, dst_angles) -> "Mobius":
        src = [complex(np.exp(1j * t)) for t in src_angles]
        dst = [complex(np.exp(1j * t)) for t in dst_angles]
        return Mobius.from_triples(src, dst)

    @staticmethod
    def canonical_normalizer(t0, t1, t2) -> "Mobius":
        """Disk automorphism sending ideal points (t0, t1, t2), listed in
        counterclockwise order, to angles (0, pi/2, pi)."""
        return Mobius.from_boundary_angles((t0, t1, t2), (0.0, np.pi / 2, np.pi))

    @staticmethod
    def random_isometry(rng) -> "Mobius":
        phi = rng.uniform(0.0, TWO_PI)
        r = 0.8 * np.sqrt(rng.uniform())
        psi = rng.uniform(0.0, TWO_PI)
        return Mobius.rotation(phi).compose(Mobius.disk_translation(r * np.exp(1j * psi)))

    @staticmethod
    def disk_to_uhp(base_theta) -> "Mobius":
        """Disk -> upper half plane sending the ideal point base_theta to
        infinity and the disk center to i."""
        xi = np.exp(1j * base_theta)
        return Mobius(np.array([[1j, 1j * xi], [-1.0, xi]], dtype=complex))


def exp_map(p, phi, s):
    """Geodesic flow: start at p, direction angle phi (measured in the
    tangent space pulled back to the origin), arclength s."""
    M = Mobius.disk_translation(p)
    return M.apply(np.tanh(np.asarray(s) / 2.0) * np.exp(1j * phi))


# ---------------------------------------------------------------------------
# tangent circles and simple closed forms


def tangent_circle_poles(poles, tol: Tolerances = DEFAULT_TOL,
                         resid_tol: float | None = None):
    """Hyperboloid center X and common sinh-distance s for a circle at
    equal positive signed distance from >= 3 oriented poles.

    Solves <X, u_i> = s with <X, X> = -1 on the hyperboloid; for more
    than three poles the system is solved in the least-squares sense and
    the residual is required to be below resid_tol (default tol.geom).
    """
    U = np.asarray(poles, dtype=float)
    k = U.shape[0]
    if k < 3:
        raise GeometryError("need at least three geodesics")
    J = np.diag([-1.0, 1.0, 1.0])
    A = U @ J
    ones = np.ones(k)
    if k == 3:
        try:
            v = np.linalg.solve(A, ones)
            # one step of iterative refinement in extended precision: the
            # system turns ill-conditioned when two poles nearly coincide
            # (deep spine vertices), and the raw solve loses ~cond digits
            r = ones - np.asarray(A.astype(np.longdouble)
                                  @ v.astype(np.longdouble), dtype=float)
            v = v + np.linalg.solve(A, r)
        except np.linalg.LinAlgError as e:
            raise GeometryError("tangent circle system is singular") from e
    else:
        v, *_ = np.linalg.lstsq(A, ones, rcond=None)
    q = float(v @ J @ v)
    if q >= -1e-14:
        raise GeometryError("no common tangent circle in the bounded region")
    s = 1.0 / np.sqrt(-q)
    X = s * v
    if X[0] < 0:
        X, s = -X, -s
    if s <= 0:
        raise GeometryError("tangent circle lies on the wrong side")
    if resid_tol is None:
        resid_tol = max(tol.geom, 1e-10)
    resid = np.abs(A @ X - s)
    # rows for near-degenerate geodesics have entries ~ 1/gap, and their
    # products cannot cancel below the row scale times machine epsilon
    floor = 50.0 * np.finfo(float).eps * (np.abs(A) @ np.abs(X))
    if np.any(resid > np.maximum(resid_tol * max(1.0, s), floor)):
        raise GeometryError(
            f"tangent circle residual {float(np.max(resid)):.3e} too large")
    return X, float(s)


def tangent_circle(g1: Geodesic, g2: Geodesic, g3: Geodesic, interior_point=None,
                   tol: Tolerances = DEFAULT_TOL) -> HypCircle:
    """Circle tangent to three geodesics bounding a common region.

    `interior_point` (a disk point) orients the three geodesics so that
    the region lies on their positive side; when omitted, the Klein-model
    centroid of the six ideal endpoints is used.
    """
    gs = (g1, g2, g3)
    if interior_point is None:
        ks = np.concatenate([np.exp(1j * np.array([g.a, g.b])) for g in gs])
        kmean = np.mean(ks)
        if abs(kmean) > 0.999:
            raise GeometryError("cannot infer an interior reference point")
        ref = np.array([1.0, kmean.real, kmean.imag]) / np.sqrt(1.0 - abs(kmean) ** 2)
    else:
        ref = disk_to_hyperboloid(interior_point)
    poles = []
    for g in gs:
        u = g.pole
        if mink(ref, u) < 0:
            u = -u
        poles.append(u)
    X, s = tangent_circle_poles(np.array(poles), tol)
    return HypCircle(complex(hyperboloid_to_disk(X)), float(np.arcsinh(s)))


def hypercycle_length(length: float, y: float) -> float:
    """Length of the hypercycle segment at offset y over an axis segment
    whose geodesic length is `length`."""
    return float(length) * float(np.cosh(y))


def saccheri_distance(Q: float, eps: float) -> float:
    """Distance between the two far endpoints of equal perpendiculars of
    length Q erected on the same side of a segment of length eps."""
    return 2.0 * float(np.arcsinh(np.cosh(Q) * np.sinh(eps / 2.0)))


def horocycle_arc_length(p, q):
    """Intrinsic arclength between two points of a common horocycle
    (through the finite side): 2 sinh(d/2)."""
    return 2.0 * np.sinh(dist(p, q) / 2.0)


# ---------------------------------------------------------------------------
# corner chart closed forms (circles tangent to the y-axis at 0 against
# h-cycles tangent to the x-axis at 0)


def corner_point(u, v):
    """Intersection C_u ∩ h_v in the corner chart: the nonzero meeting
    point of the circle of parameter u (tangent to the y-axis) with the
    h-cycle of parameter v (tangent to the x-axis)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    denom = 1.0 + u * u * v * v
    return (2.0 * u + 2j * u * u * v) / denom


def corner_coords(z):
    """Inverse of corner_point for chart points with positive real part."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    w = y / x
    u = x * (1.0 + w * w) / 2.0
    v = w / u
    return u, v


def corner_arclength(r, eps):
    """Hyperbolic length of the h-cycle h_r between the corner (origin)
    and C_eps, i.e. of its radial parametrization over [0, eps].

    Closed form of ∫ 4 du / (1 + (r^2-4) u^2).
    """
    r = float(r)
    eps = np.asarray(eps, dtype=float)
    k2 = 4.0 - r * r
    if abs(k2) < 1e-12:
        return 4.0 * eps
    if k2 > 0:
        k = np.sqrt(k2)
        return (4.0 / k) * np.arctanh(k * eps)
    k = np.sqrt(-k2)
    return (4.0 / k) * np.arctan(k * eps)


def corner_arclength_inv(r, s):
    """Inverse of corner_arclength in eps for fixed r."""
    r = float(r)
    s = np.asarray(s, dtype=float)
    k2 = 4.0 - r * r
    if abs(k2) < 1e-12:
        return s / 4.0
    if k2 > 0:
        k = np.sqrt(k2)
        return np.tanh(s * k / 4.0) / k
    k = np.sqrt(-k2)
    return np.tan(s * k / 4.0) / k
