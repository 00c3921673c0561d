"""Metric ribbon trees dual to arc systems on an ideal polygon.

A tree with n labeled rays embedded (up to isotopy) in a disk is the
same data as a system of pairwise non-crossing weighted arcs connecting
the boundary sides: each finite edge is dual to the arc joining the two
sides that project onto it.  We therefore store a tree canonically as
its weighted arc system `{(i, j): weight}` plus the number of sides n,
and recover all ribbon structure (vertices, cyclic orders, boundary
walks) by a face traversal of the chord diagram.

Side i of the polygon runs counterclockwise from ideal vertex i to
vertex i+1 (mod n); "gap k" denotes the corner at ideal vertex k,
between sides k-1 and k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .hypcore import GeometryError


def _norm_arc(key):
    i, j = key
    i, j = int(i), int(j)
    if i == j:
        raise GeometryError("an arc must join two distinct sides")
    return (i, j) if i < j else (j, i)


def arcs_cross(a, b, n):
    """Strict interleaving test for two side pairs on the n-cycle."""
    a, b = _norm_arc(a), _norm_arc(b)
    if a == b or a[0] in b or a[1] in b:
        return False
    i, j = a
    inside = lambda k: i < k < j
    return inside(b[0]) != inside(b[1])


@dataclass
class Face:
    """One complementary region of the chord diagram.

    items: cyclic list of ("gap", k) and ("chord", arc, enter_side,
    exit_side) entries, in counterclockwise order with the region on the
    left.  sides: the boundary sides the region touches, in the same
    cyclic order.
    """

    index: int
    items: list
    gaps: list
    arcs: list
    sides: list


class ArcSystem:
    """Combinatorics of a non-crossing weighted arc system on n sides."""

    def __init__(self, n: int, arcs: dict):
        self.n = int(n)
        if self.n < 3:
            raise GeometryError("need at least 3 sides")
        norm = {}
        for key, w in arcs.items():
            k = _norm_arc(key)
            if k in norm:
                raise GeometryError(f"duplicate arc {k}")
            w = float(w)
            if not w > 0:
                raise GeometryError(f"arc {k} needs positive weight")
            if (k[1] - k[0]) % self.n in (1, self.n - 1):
                raise GeometryError(f"arc {k} is homotopic into a spike")
            norm[k] = w
        keys = sorted(norm)
        for i in range(len(keys)):
            for j in range(i + 1, len(keys)):
                if arcs_cross(keys[i], keys[j], self.n):
                    raise GeometryError(f"arcs {keys[i]} and {keys[j]} cross")
        self.arcs = {k: norm[k] for k in keys}
        self._build_faces()

    # -- chord diagram traversal --------------------------------------

    def _build_faces(self):
        n = self.n
        # tokens per side, ordered from vertex i to vertex i+1: arcs with
        # farther counterclockwise landing side come first (nesting)
        side_tokens = {i: [] for i in range(n)}
        for key in self.arcs:
            i, j = key
            side_tokens[i].append((-((j - i) % n), key, i))
            side_tokens[j].append((-((i - j) % n), key, j))
        items = []
        for k in range(n):
            items.append(("gap", k))
            for _, key, side in sorted(side_tokens[k]):
                items.append(("token", key, side))
        m = len(items)
        token_pos = {}
        for idx, it in enumerate(items):
            if it[0] == "token":
                token_pos[(it[1], it[2])] = idx

        faces = []
        token_face = {}
        if not token_pos:
            faces.append(
                Face(0, [("gap", k) for k in range(n)], list(range(n)), [],
                     list(range(n)))
            )
            self.faces = faces
            self.token_face = {}
            self._finalize(side_tokens)
            return

        def partner(tok):
            key, side = tok
            other = key[0] if side == key[1] else key[1]
            return (key, other)

        remaining = set(token_pos)
        while remaining:
            t0 = min(remaining)
            face_items = []
            face_sides = []
            f_idx = len(faces)
            t = t0
            while True:
                remaining.discard(t)
                token_face[t] = f_idx
                pt = partner(t)
                face_items.append(("chord", t[0], t[1], pt[1]))
                cur_side = pt[1]
                if not face_sides or face_sides[-1] != cur_side:
                    face_sides.append(cur_side)
                i = token_pos[pt]
                while True:
                    i = (i + 1) % m
                    it = items[i]
                    if it[0] == "gap":
                        face_items.append(("gap", it[1]))
                        cur_side = it[1]
                        face_sides.append(cur_side)
                    else:
                        t_next = (it[1], it[2])
                        break
                if t_next == t0:
                    break
                t = t_next
            if face_sides and len(face_sides) > 1 and face_sides[0] == face_sides[-1]:
                face_sides.pop()
            gaps = [it[1] for it in face_items if it[0] == "gap"]
            arcs = [it[1] for it in face_items if it[0] == "chord"]
            if len(set(face_sides)) != len(face_sides):
                raise GeometryError("region touches a side twice; invalid system")
            faces.append(Face(f_idx, face_items, gaps, arcs, face_sides))

        self.faces = faces
        self.token_face = token_face
        self._finalize(side_tokens)

    def _finalize(self, side_tokens):
        n = self.n
        # tree checks
        if len(self.faces) != len(self.arcs) + 1:
            raise GeometryError("arc system is not dual to a tree")
        for f in self.faces:
            if len(f.gaps) + len(f.arcs) < 3:
                raise GeometryError(
                    f"region {f.index} has valence {len(f.gaps) + len(f.arcs)} < 3"
                )
        # the two faces adjacent to each arc
        self.arc_faces = {}
        for f in self.faces:
            for it in f.items:
                if it[0] == "chord":
                    self.arc_faces.setdefault(it[1], []).append(f.index)
        for key, pair in self.arc_faces.items():
            if len(pair) != 2 or pair[0] == pair[1]:
                raise GeometryError(f"arc {key} does not separate two regions")
        # ordered faces along each side, from vertex i toward vertex i+1
        if self.token_face:
            items_flat = []
            for k in range(n):
                for _, key, side in sorted(side_tokens[k]):
                    items_flat.append((k, (key, side)))
            self.side_faces = {}
            for k in range(n):
                toks = [tok for s, tok in items_flat if s == k]
                seq = [self.token_face[t] for t in toks]
                # the interval closing the side is entered at the next token
                # counterclockwise after the side
                pos = [i for i, (s, _) in enumerate(items_flat) if s == k]
                nxt = (pos[-1] + 1) % len(items_flat) if pos else None
                if nxt is None:
                    # no token on this side: first token after vertex k+1
                    after = [i for i, (s, _) in enumerate(items_flat) if s > k]
                    nxt = after[0] if after else 0
                seq.append(self.token_face[items_flat[nxt][1]])
                self.side_faces[k] = seq
        else:
            self.side_faces = {k: [0] for k in range(n)}
        # owner face of each gap (the region whose boundary shows the corner)
        self.ray_owner = {}
        for f in self.faces:
            for k in f.gaps:
                self.ray_owner[k] = f.index


class MetricRibbonTree:
    """Metric ribbon tree with n labeled rays, stored as its dual
    weighted arc system."""

    def __init__(self, n: int, arcs: dict):
        self.system = ArcSystem(n, arcs)
        self.n = self.system.n
        self.arcs = dict(self.system.arcs)
        self._paths = None

    def __repr__(self):
        return f"MetricRibbonTree(n={self.n}, arcs={self.arcs})"

    @property
    def faces(self):
        return self.system.faces

    def num_vertices(self):
        return len(self.faces)

    def num_edges(self):
        return len(self.arcs)

    def scaled(self, factor: float) -> "MetricRibbonTree":
        if factor <= 0:
            raise GeometryError("scale factor must be positive")
        return MetricRibbonTree(self.n, {k: factor * w for k, w in self.arcs.items()})

    def same_combinatorics(self, other: "MetricRibbonTree") -> bool:
        return self.n == other.n and set(self.arcs) == set(other.arcs)

    # -- paths and the tree metric -------------------------------------

    def _ensure_paths(self):
        if self._paths is not None:
            return
        V = len(self.faces)
        adj = {v: [] for v in range(V)}
        for key, (f1, f2) in self.system.arc_faces.items():
            w = self.arcs[key]
            adj[f1].append((f2, key, w))
            adj[f2].append((f1, key, w))
        dist = np.zeros((V, V))
        step = {}
        for src in range(V):
            seen = {src: 0.0}
            prev = {src: None}
            stack = [src]
            while stack:
                v = stack.pop()
                for u, key, w in adj[v]:
                    if u not in seen:
                        seen[u] = seen[v] + w
                        prev[u] = (v, key)
                        stack.append(u)
            for u in range(V):
                dist[src, u] = seen[u]
            step[src] = prev
        self._paths = (dist, step, adj)

    def face_distance(self, f1, f2):
        self._ensure_paths()
        return float(self._paths[0][f1, f2])

    def path_faces(self, f1, f2):
        """Faces along the tree path from f1 to f2, inclusive."""
        self._ensure_paths()
        prev = self._paths[1][f1]
        out = [f2]
        v = f2
        while prev[v] is not None:
            v = prev[v][0]
            out.append(v)
        return out[::-1]

    def point_distance(self, p: "TreePoint", q: "TreePoint") -> float:
        """Path metric between two tree points."""
        if p.kind == q.kind and p.label == q.label:
            if p.kind == "vertex":
                return 0.0
            if p.kind == "ray":
                return abs(p.t - q.t)
            # same edge: express both offsets from the same endpoint
            f0 = self.system.arc_faces[p.label][0]
            w = self.arcs[p.label]
            tp = p.t if p.anchor_face in (None, f0) else w - p.t
            tq = q.t if q.anchor_face in (None, f0) else w - q.t
            return abs(tp - tq)
        best = np.inf
        for f1, off1 in p.anchors(self):
            for f2, off2 in q.anchors(self):
                best = min(best, off1 + self.face_distance(f1, f2) + off2)
        return float(best)


@dataclass
class TreePoint:
    """A point of a metric ribbon tree.

    kind "vertex": label = face index, t ignored.
    kind "edge":   label = arc key, t = distance from anchor_face's end.
    kind "ray":    label = gap index, t = distance from the attaching vertex.
    """

    kind: str
    label: object
    t: float = 0.0
    anchor_face: int | None = None

    def anchors(self, tree: MetricRibbonTree):
        if self.kind == "vertex":
            return [(self.label, 0.0)]
        if self.kind == "ray":
            return [(tree.system.ray_owner[self.label], self.t)]
        f1, f2 = tree.system.arc_faces[self.label]
        w = tree.arcs[self.label]
        if self.anchor_face is not None and self.anchor_face == f2:
            f1, f2 = f2, f1
        return [(f1, self.t), (f2, w - self.t)]

    def scaled(self, factor: float) -> "TreePoint":
        return TreePoint(self.kind, self.label, self.t * factor, self.anchor_face)


def star(n: int) -> MetricRibbonTree:
    """The tree with a single vertex and n rays."""
    return MetricRibbonTree(n, {})


def tree_from_arcs(n: int, arcs: dict) -> MetricRibbonTree:
    """Dual tree of a weighted non-crossing arc system (validates)."""
    return MetricRibbonTree(n, arcs)


def dual_arcs(tree: MetricRibbonTree) -> dict:
    """Weighted arc system dual to the tree (inverse of tree_from_arcs)."""
    return dict(tree.arcs)


def o1_compare(t1: MetricRibbonTree, t2: MetricRibbonTree) -> float:
    """Least C such that the trees agree within C: common arcs may
    differ by at most C in weight and all other arcs weigh at most C."""
    if t1.n != t2.n:
        raise GeometryError("trees have different numbers of rays")
    c = 0.0
    for key in set(t1.arcs) | set(t2.arcs):
        w1 = t1.arcs.get(key)
        w2 = t2.arcs.get(key)
        if w1 is None:
            c = max(c, w2)
        elif w2 is None:
            c = max(c, w1)
        else:
            c = max(c, abs(w1 - w2))
    return float(c)
