"""Weighted trees: enumeration, theta weights, amplitudes, junction and reduction.

A tree has leaves 0..n-1 (leaf 0 is the reference leaf v0) and n-2
internal vertices of valence 3.  Edge i < n is the external edge of leaf
i; internal edges are numbered from n upward.  Each edge e carries the
momentum sum of the leaves in K_e, the leaves on the far side of e seen
from v0.

A weight theta = rho + sigma assigns integers to edges: rho comes from a
choice chi of one incident internal edge per regular vertex, sigma from
distributing the derivative counts w_v over the edges that see leaf v.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .momenta import MomentumConfig, W_MAX

FIELD_TYPES = ("A", "c", "cb", "gamma", "omega", "beta")
KAPPA_TYPES = ("gamma", "omega")
MAX_LEAVES = 7
MAX_STARS = 2


# --------------------------------------------------------------------------
# topologies


class Topology:
    """Unlabeled-internal, leaf-labeled tree with valence-3 internal vertices.

    Vertices 0..n-1 are leaves, n..2n-3 internal.  edges[e] = (child, parent)
    with the parent on the v0 side.
    """

    __slots__ = ("n", "edges", "far", "key", "_incident", "_masks")

    def __init__(self, n, edges, far, key):
        self.n = n
        self.edges = edges
        self.far = far
        self.key = key
        inc = {}
        for e, (a, b) in enumerate(edges):
            inc.setdefault(a, []).append(e)
            inc.setdefault(b, []).append(e)
        self._incident = {v: tuple(es) for v, es in inc.items()}
        masks = np.zeros((len(edges), n))
        for e, K in enumerate(far):
            masks[e, list(K)] = 1.0
        self._masks = masks

    def __repr__(self):
        return f"Topology(n={self.n}, key={self.key})"

    def __eq__(self, other):
        return isinstance(other, Topology) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @property
    def internal_vertices(self):
        return tuple(range(self.n, 2 * self.n - 2))

    @property
    def internal_edges(self):
        return tuple(range(self.n, len(self.edges)))

    def incident(self, v):
        return self._incident[v]

    def other_end(self, e, v):
        a, b = self.edges[e]
        return b if a == v else a

    @classmethod
    def from_edges(cls, n, edges):
        """Normalize an edge list on arbitrary vertex ids.

        Leaves must be the integers 0..n-1.  Returns (topology, edge_map,
        vertex_map) mapping input edge positions and internal vertex ids to
        their normalized numbers.
        """
        adj = {}
        for i, (a, b) in enumerate(edges):
            adj.setdefault(a, []).append((b, i))
            adj.setdefault(b, []).append((a, i))
        if len(edges) != max(2 * n - 3, 1):
            raise ValueError("edge count does not match a cubic tree")
        for v, nb in adj.items():
            is_leaf = isinstance(v, (int, np.integer)) and 0 <= v < n
            if is_leaf and len(nb) != 1:
                raise ValueError(f"leaf {v} has valence {len(nb)}")
            if not is_leaf and len(nb) != 3:
                raise ValueError(f"internal vertex {v!r} has valence {len(nb)}")
        # orient toward leaf 0 and collect far-side leaf sets
        parent_edge = {0: None}
        order = [0]
        stack = [0]
        while stack:
            v = stack.pop()
            for u, i in adj[v]:
                if u not in parent_edge:
                    parent_edge[u] = i
                    order.append(u)
                    stack.append(u)
        below = {}
        for v in reversed(order):
            s = {v} if (isinstance(v, (int, np.integer)) and 0 <= v < n and v != 0) else set()
            for u, i in adj[v]:
                if parent_edge.get(u) == i and u != v and parent_edge[v] != i:
                    s |= below[u]
            below[v] = frozenset(s)
        far_of_input = {}
        child_of_input = {}
        for v in order[1:]:
            i = parent_edge[v]
            far_of_input[i] = below[v]
            child_of_input[i] = v
        internal = [v for v in adj if not (isinstance(v, (int, np.integer)) and 0 <= v < n)]
        internal.sort(key=lambda v: (-len(below[v]), tuple(sorted(below[v]))))
        vmap = {v: n + k for k, v in enumerate(internal)}
        for v in range(n):
            vmap[v] = v

        def rename(v):
            return vmap[v]

        ext = {}
        intl = []
        for i in range(len(edges)):
            child = child_of_input[i]
            if isinstance(child, (int, np.integer)) and 0 <= child < n:
                ext[int(child)] = i
            else:
                a, b = edges[i]
                if b == child:
                    a, b = b, a
                # edge 0 hangs on leaf 0, whose "child" is the internal vertex
                if a == 0 or b == 0:
                    ext[0] = i
                else:
                    intl.append(i)
        # leaf 0 edge: child side is the internal vertex, far set is everything
        intl.sort(key=lambda i: tuple(sorted(far_of_input[i])))
        edge_map = {}
        new_edges = []
        new_far = []
        for leaf in range(n):
            i = ext[leaf]
            edge_map[i] = leaf
            a, b = edges[i]
            other = b if a == leaf else a
            if leaf == 0:
                new_edges.append((rename(other), 0))
                new_far.append(far_of_input[i])
            else:
                new_edges.append((leaf, rename(other)))
                new_far.append(far_of_input[i])
        for k, i in enumerate(intl):
            edge_map[i] = n + k
            child = child_of_input[i]
            a, b = edges[i]
            par = b if a == child else a
            new_edges.append((rename(child), rename(par)))
            new_far.append(far_of_input[i])
        key = _canonical(n, new_edges)
        topo = cls(n, tuple(new_edges), tuple(new_far), key)
        return topo, edge_map, vmap


def _canonical(n, edges):
    """Nested sorted-tuple encoding of the tree rooted at leaf 0."""
    children = {}
    for a, b in edges:
        children.setdefault(b, []).append(a)

    def enc(v):
        if v < n:
            return v
        return tuple(sorted((enc(c) for c in children[v]), key=repr))

    return enc(children[0][0]) if n > 1 else ()


@lru_cache(maxsize=None)
def topologies(n: int) -> tuple:
    """All (2n-5)!! leaf-labeled cubic tree topologies on n leaves."""
    if n < 3:
        raise ValueError("trees need at least 3 leaves")
    if n > MAX_LEAVES:
        raise ValueError(f"enumeration is capped at {MAX_LEAVES} leaves")
    # grow by inserting leaf k into every edge of each tree on k leaves
    trees = [[(0, "x0"), (1, "x0"), (2, "x0")]]
    fresh = itertools.count(1)
    for k in range(3, n):
        grown = []
        for edges in trees:
            for j, (a, b) in enumerate(edges):
                y = f"x{next(fresh)}"
                new = edges[:j] + edges[j + 1:] + [(a, y), (y, b), (k, y)]
                grown.append(new)
        trees = grown
    out = {}
    for edges in trees:
        topo, _, _ = Topology.from_edges(n, edges)
        out[topo.key] = topo
    return tuple(out[k] for k in sorted(out, key=repr))


def double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


# --------------------------------------------------------------------------
# weighted trees


class WeightedTree(NamedTuple):
    """Tree with typed leaves, regular/hollow flags and star labels."""

    topology: Topology
    labels: tuple
    hollow: frozenset
    stars: tuple

    @property
    def n(self):
        return self.topology.n

    @property
    def edges(self):
        return self.topology.edges

    @property
    def regular(self):
        return tuple(v for v in self.topology.internal_vertices if v not in self.hollow)

    @property
    def star_edges(self):
        return tuple(e for e, s in enumerate(self.stars) if s > 0)

    @property
    def kappa_edges(self):
        return tuple(i for i, lab in enumerate(self.labels) if lab in KAPPA_TYPES)

    def K(self, e):
        return self.topology.far[e]

    def to_dict(self):
        t = self.topology
        return {
            "labels": list(self.labels),
            "vertices": [
                {"id": v, "kind": "leaf", "label": self.labels[v]} for v in range(t.n)
            ] + [
                {"id": v, "kind": "hollow" if v in self.hollow else "regular"}
                for v in t.internal_vertices
            ],
            "edges": [
                {"id": e, "ends": list(t.edges[e]), "stars": self.stars[e], "K": sorted(t.far[e])}
                for e in range(len(t.edges))
            ],
        }

    def to_dot(self) -> str:
        t = self.topology
        lines = ["graph tree {"]
        for v in range(t.n):
            lines.append(f'  {v} [label="{self.labels[v]}{v}", shape=plaintext];')
        for v in t.internal_vertices:
            shape = "circle" if v in self.hollow else "point"
            lines.append(f"  {v} [shape={shape}];")
        for e, (a, b) in enumerate(t.edges):
            star = "*" * self.stars[e]
            lines.append(f'  {a} -- {b} [label="{e}{star}"];')
        lines.append("}")
        return "\n".join(lines)


def _check_labels(labels):
    labels = tuple(labels)
    for lab in labels:
        if lab not in FIELD_TYPES:
            raise ValueError(f"unknown field label {lab!r}; expected one of {FIELD_TYPES}")
    return labels


def make_tree(topology: Topology, labels, stars=None, hollow=None) -> WeightedTree:
    labels = _check_labels(labels)
    if len(labels) != topology.n:
        raise ValueError("label count does not match the number of leaves")
    if stars is None:
        stars = (0,) * len(topology.edges)
    if hollow is None:
        hollow = topology.internal_vertices if topology.n == 3 else ()
    return WeightedTree(topology, labels, frozenset(hollow), tuple(stars))


def enumerate_trees(field_labels, star_total: int = 0) -> list:
    """All trees of T^(s) for the given leaf labels and total star count s."""
    labels = _check_labels(field_labels)
    n = len(labels)
    if n < 3:
        raise ValueError("trees need at least 3 leaves")
    if not 0 <= star_total <= MAX_STARS:
        raise ValueError(f"star_total must lie in [0, {MAX_STARS}]")
    out = []
    for topo in topologies(n):
        hollow = frozenset(topo.internal_vertices) if n == 3 else frozenset()
        n_edges = len(topo.edges)
        for combo in itertools.combinations_with_replacement(range(n_edges), star_total):
            stars = [0] * n_edges
            for e in combo:
                stars[e] += 1
            out.append(WeightedTree(topo, labels, hollow, tuple(stars)))
    return out


# --------------------------------------------------------------------------
# momenta on edges


def edge_momenta(tree: WeightedTree, cfg: MomentumConfig) -> np.ndarray:
    """p_e = sum of the momenta of the leaves in K_e, one row per edge."""
    if cfg.n != tree.n:
        raise ValueError("configuration size does not match the tree")
    return tree.topology._masks @ cfg.p


def momentum_map(tree: WeightedTree, cfg: MomentumConfig) -> dict:
    return {"p_e": edge_momenta(tree, cfg), "K": [tree.K(e) for e in range(len(tree.edges))]}


# --------------------------------------------------------------------------
# theta weights


@dataclass(frozen=True)
class ThetaWeight:
    theta: tuple
    rho: tuple
    sigma: tuple
    chi: tuple = field(default=())  # (vertex, edge) pairs for regular vertices

    @property
    def total(self):
        return sum(self.theta)


def rho_weights(tree: WeightedTree):
    """Distinct (rho, chi) pairs; chi picks one incident internal edge per regular vertex."""
    topo = tree.topology
    internal = set(topo.internal_edges)
    choices = []
    regular = tree.regular
    for v in regular:
        opts = [e for e in topo.incident(v) if e in internal]
        if not opts:
            return []
        choices.append(opts)
    seen = {}
    n_edges = len(topo.edges)
    for pick in itertools.product(*choices):
        rho = [0] * n_edges
        for e in internal:
            rho[e] = 2
        for e in pick:
            rho[e] -= 1
        rho = tuple(rho)
        if rho not in seen:
            seen[rho] = tuple(zip(regular, pick))
    return sorted(seen.items())


def sigma_weights(tree: WeightedTree, w):
    """Distinct sigma maps: each leaf v spreads w_v over the edges e with v in K_e."""
    topo = tree.topology
    w = tuple(w)
    if len(w) != topo.n:
        raise ValueError("multi-index length does not match the tree")
    if w[0] != 0:
        raise ValueError("w_0 must vanish")
    n_edges = len(topo.edges)
    current = {(0,) * n_edges}
    for v in range(1, topo.n):
        if w[v] == 0:
            continue
        support = [e for e in range(n_edges) if v in topo.far[e]]
        nxt = set()
        for combo in itertools.combinations_with_replacement(support, w[v]):
            add = [0] * n_edges
            for e in combo:
                add[e] += 1
            for base in current:
                nxt.add(tuple(a + b for a, b in zip(base, add)))
        current = nxt
    return sorted(current)


@lru_cache(maxsize=200_000)
def _theta_cached(topology: Topology, hollow: frozenset, w: tuple):
    dummy = WeightedTree(topology, ("A",) * topology.n, hollow, (0,) * len(topology.edges))
    rhos = rho_weights(dummy)
    sigmas = sigma_weights(dummy, w)
    found = {}
    for rho, chi in rhos:
        for sig in sigmas:
            th = tuple(r + s for r, s in zip(rho, sig))
            if th not in found:
                found[th] = ThetaWeight(th, rho, sig, chi)
    return tuple(found[k] for k in sorted(found))


def theta_set(tree: WeightedTree, w) -> tuple:
    """The set Theta^w of theta weights, deduplicated as maps E -> N."""
    w = tuple(int(x) for x in w)
    if sum(w) > W_MAX:
        raise ValueError(f"|w| exceeds w_max = {W_MAX}")
    return _theta_cached(tree.topology, tree.hollow, w)


def total_theta(tree: WeightedTree, theta, w=None) -> int:
    """Sum of theta over all edges; for n >= 4 this must equal n + |w| - 4."""
    th = theta.theta if isinstance(theta, ThetaWeight) else tuple(theta)
    total = int(sum(th))
    if w is not None and tree.n >= 4 and not tree.hollow:
        expected = tree.n + sum(w) - 4
        if total != expected:
            raise AssertionError(f"total theta {total} != n + |w| - 4 = {expected}")
    return total


# --------------------------------------------------------------------------
# amplitudes


def _edge_norms(tree, cfg):
    return np.linalg.norm(edge_momenta(tree, cfg), axis=1)


def amplitude_Pi(tree: WeightedTree, theta, cfg: MomentumConfig, Lam: float) -> float:
    """prod_e (Lam + |p_e|)^(-theta(e))."""
    th = np.asarray(theta.theta if isinstance(theta, ThetaWeight) else theta, dtype=float)
    base = Lam + _edge_norms(tree, cfg)
    if np.any((base == 0) & (th > 0)):
        raise ZeroDivisionError("singular amplitude: zero edge momentum at Lam = 0")
    return float(np.prod(base ** (-th)))


def _q_prefactor(tree, norms, Lam):
    num = np.prod([Lam + norms[e] for e in tree.star_edges]) if tree.star_edges else 1.0
    den = np.prod([Lam + norms[e] for e in tree.kappa_edges]) if tree.kappa_edges else 1.0
    if den == 0:
        raise ZeroDivisionError("singular amplitude: vanishing kappa-leg factor")
    return num / den


def _theta_sum(tree, w, base):
    total = 0.0
    for tw in theta_set(tree, w):
        th = np.asarray(tw.theta, dtype=float)
        if np.any((base == 0) & (th > 0)):
            raise ZeroDivisionError("singular amplitude: zero edge momentum at Lam = 0")
        total += float(np.prod(base ** (-th)))
    return total


def amplitude_Q(tree: WeightedTree, w, cfg: MomentumConfig, Lam: float, report: dict | None = None) -> float:
    """Tree bound: star/kappa prefactor times the theta-sum of Pi.

    For three-leaf trees with w != 0 the infimum over i with w_i > 0 of the
    sum at w with w_i lowered by one is used.  At w = 0 the plain sum is
    taken and, if `report` is given, report['three_point_w0'] is set.
    """
    w = tuple(int(x) for x in w)
    norms = _edge_norms(tree, cfg)
    base = Lam + norms
    pref = _q_prefactor(tree, norms, Lam)
    if tree.n == 3 and any(w):
        vals = []
        for i, wi in enumerate(w):
            if wi > 0:
                lowered = tuple(x - (1 if j == i else 0) for j, x in enumerate(w))
                vals.append(_theta_sum(tree, lowered, base))
        return pref * min(vals)
    if tree.n == 3 and report is not None:
        report["three_point_w0"] = True
    return pref * _theta_sum(tree, w, base)


# --------------------------------------------------------------------------
# junction of fragments


def is_fragment(tree: WeightedTree, s_extra=(0, 1)) -> bool:
    """Fragment test: |V_hollow| + s stars for some s, and every hollow vertex
    has at least two external edges one of which is starred."""
    if sum(tree.stars) - len(tree.hollow) not in s_extra:
        return False
    topo = tree.topology
    for v in tree.hollow:
        ext = [e for e in topo.incident(v) if e < topo.n]
        if len(ext) < 2 or not any(tree.stars[e] for e in ext):
            return False
    return True


@dataclass
class Fragment:
    """A tree whose leaf 0 is the incoming loop leg and last leaf the outgoing one.

    thetas is the explicit weight family entering its amplitude.
    """

    tree: WeightedTree
    thetas: tuple

    @classmethod
    def from_tree(cls, tree: WeightedTree, w) -> "Fragment":
        w = tuple(w)
        if w[-1] != 0:
            raise ValueError("no derivative may act on the outgoing loop leg")
        return cls(tree, tuple(t.theta for t in theta_set(tree, w)))

    @property
    def n(self):
        return self.tree.n


def _fragment_keys(frag: Fragment, offset: int, n_global: int):
    """Global momentum key of each fragment edge.

    Local leaves 1..n-2 are global leaves offset..offset+n-3; the outgoing
    leg stands for all global leaves to the right.  Keys never contain
    global leaf 0.
    """
    n = frag.n
    right = frozenset(range(offset + n - 2, n_global))
    keys = []
    for e in range(len(frag.tree.edges)):
        g = set()
        for v in frag.tree.K(e):
            if v == n - 1:
                g |= right
            else:
                g.add(offset + v - 1)
        keys.append(frozenset(g))
    return keys


def _product(exps: dict, base: dict) -> float:
    val = 1.0
    for key in sorted(exps, key=lambda k: tuple(sorted(k))):
        x = exps[key]
        if x:
            val *= base[key] ** (-x)
    return val


def _key_bases(keys, cfg: MomentumConfig, Lam: float):
    out = {}
    for k in keys:
        mom = cfg.p[list(k)].sum(axis=0) if k else np.zeros(4)
        out[k] = Lam + float(np.linalg.norm(mom))
    return out


@dataclass
class JunctionResult:
    fragment: Fragment
    cases: list
    lhs: float
    rhs: float
    lhs_factored: float
    verified: bool
    joint_thetas: list


def merge_fragments(left: Fragment, right: Fragment):
    """Join left's outgoing leg with right's incoming leg into one internal edge.

    Returns (merged fragment, case label, added joint weight per theta pair).
    """
    lt, rt = left.tree, right.tree
    nl, nr = lt.n, rt.n
    n = nl + nr - 2
    e_out = nl - 1  # outgoing leg of the left fragment
    e_in = 0  # incoming leg of the right fragment

    def lv(v):
        if v < nl - 1:
            return v
        if v == nl - 1:
            return None
        return ("L", v)

    def rv(v):
        if v == 0:
            return None
        if v < nr:
            return nl - 2 + v
        return ("R", v)

    edges = []
    origin = []
    for e, (a, b) in enumerate(lt.edges):
        if e == e_out:
            continue
        edges.append((lv(a), lv(b)))
        origin.append(("L", e))
    for e, (a, b) in enumerate(rt.edges):
        if e == e_in:
            continue
        edges.append((rv(a), rv(b)))
        origin.append(("R", e))
    v_l = lt.topology.other_end(e_out, e_out)
    v_r = rt.topology.other_end(e_in, e_in)
    edges.append((("L", v_l), ("R", v_r)))
    origin.append(("J", None))
    topo, emap, vmap = Topology.from_edges(n, edges)

    l_hollow = v_l in lt.hollow
    r_hollow = v_r in rt.hollow
    l_star = lt.stars[e_out]
    r_star = rt.stars[e_in]
    consumed = l_star + r_star
    joint_bonus = 2 - consumed
    case = ("hollow" if l_hollow else "regular") + "-" + ("hollow" if r_hollow else "regular")
    case += f":stars_on_joint={consumed}"

    stars = [0] * len(topo.edges)
    hollow = set()
    for i, (side, e) in enumerate(origin):
        if side == "L":
            stars[emap[i]] = lt.stars[e]
        elif side == "R":
            stars[emap[i]] = rt.stars[e]
    for v in lt.hollow:
        if v == v_l and l_star:
            continue
        hollow.add(vmap[("L", v)])
    for v in rt.hollow:
        if v == v_r and r_star:
            continue
        hollow.add(vmap[("R", v)])
    # unconsumed stars sitting on the loop legs themselves do not survive the
    # joint; a star on a leg is only meaningful at a hollow vertex
    labels = lt.labels[:-1] + rt.labels[1:]
    tree = WeightedTree(topo, labels, frozenset(hollow), tuple(stars))

    thetas = []
    joint = []
    joint_pos = emap[len(origin) - 1]
    for th_l in left.thetas:
        for th_r in right.thetas:
            th = [0] * len(topo.edges)
            for i, (side, e) in enumerate(origin):
                if side == "L":
                    th[emap[i]] = th_l[e]
                elif side == "R":
                    th[emap[i]] = th_r[e]
            th[joint_pos] = th_l[e_out] + th_r[e_in] + joint_bonus
            thetas.append(tuple(th))
            joint.append(th[joint_pos])
    if len(set(thetas)) != len(thetas):
        raise AssertionError("joint weight map is not injective")
    return Fragment(tree, tuple(thetas)), case, joint


def _fragment_exponents(frag: Fragment, theta, keys):
    exps = {}
    for e, x in enumerate(theta):
        exps[keys[e]] = exps.get(keys[e], 0) + x
    for e, s in enumerate(frag.tree.stars):
        if s:
            exps[keys[e]] = exps.get(keys[e], 0) - s
    return exps


def junction_bound(fragments, cfg: MomentumConfig, Lam: float) -> JunctionResult:
    """Merge a sequence of fragments left to right and compare amplitudes.

    cfg holds the global external momenta: the first fragment's incoming leg,
    every fragment's inner leaves in order, and the last outgoing leg.
    The product of fragment amplitudes with (Lam + |p_joint|)^-2 per joint is
    expanded term by term and compared with the merged fragment amplitude.
    """
    fragments = list(fragments)
    if not fragments:
        raise ValueError("need at least one fragment")
    for f in fragments:
        if not is_fragment(f.tree):
            raise ValueError("input is not a fragment")
    n_global = 2 + sum(f.n - 2 for f in fragments)
    if cfg.n != n_global:
        raise ValueError(f"expected {n_global} global momenta, got {cfg.n}")
    # keys per fragment and joints
    frag_keys = []
    offset = 1
    joint_keys = []
    for j, f in enumerate(fragments):
        frag_keys.append(_fragment_keys(f, offset, n_global))
        offset += f.n - 2
        if j < len(fragments) - 1:
            joint_keys.append(frozenset(range(offset, n_global)))
    merged = fragments[0]
    cases = []
    joints = []
    for f in fragments[1:]:
        merged, case, joint = merge_fragments(merged, f)
        cases.append(case)
        joints.append(joint)
    mkeys = [merged.tree.K(e) for e in range(len(merged.tree.edges))]
    all_keys = set(mkeys) | set(joint_keys)
    for ks in frag_keys:
        all_keys |= set(ks)
    base = _key_bases(all_keys, cfg, Lam)

    # left side, expanded in the same order as the merge produced thetas
    lhs = 0.0
    lhs_terms = []
    for combo in itertools.product(*[f.thetas for f in fragments]):
        exps = {}
        for f, th, keys in zip(fragments, combo, frag_keys):
            for k, x in _fragment_exponents(f, th, keys).items():
                exps[k] = exps.get(k, 0) + x
        for k in joint_keys:
            exps[k] = exps.get(k, 0) + 2
        lhs_terms.append(_product(exps, base))
    lhs = math.fsum(lhs_terms)
    rhs_terms = [_product(_fragment_exponents(merged, th, mkeys), base) for th in merged.thetas]
    rhs = math.fsum(rhs_terms)
    factored = 1.0
    for f, keys in zip(fragments, frag_keys):
        factored *= math.fsum(_product(_fragment_exponents(f, th, keys), base) for th in f.thetas)
    for k in joint_keys:
        factored *= base[k] ** -2
    return JunctionResult(merged, cases, lhs, rhs, factored, bool(lhs <= rhs), joints)


# --------------------------------------------------------------------------
# reduction of the loop legs


@dataclass
class LegReduction:
    tree: WeightedTree
    weight: ThetaWeight
    case: str
    in_theta_set: bool


def _rebuild_weight(topo, emap, vmap, old_tree, weight, merged_from, removed_edges, removed_vertices,
                    repoint_pref):
    """Transport (rho, sigma, chi) to a smaller tree, repairing chi where needed."""
    n_edges = len(topo.edges)
    sigma = [0] * n_edges
    for old_e, new_e in emap.items():
        sigma[new_e] += weight.sigma[old_e]
    for old_e, new_e in merged_from.items():
        sigma[new_e] += weight.sigma[old_e]
    old_chi = dict(weight.chi)
    internal = set(topo.internal_edges)
    new_chi = {}
    repaired = []
    for v, e in old_chi.items():
        if v in removed_vertices:
            continue
        nv = vmap[v]
        if e in emap and emap[e] in internal:
            new_chi[nv] = emap[e]
        elif e in merged_from and merged_from[e] in internal:
            new_chi[nv] = merged_from[e]
        else:
            repaired.append(nv)
    for nv in repaired:
        opts = [e for e in topo.incident(nv) if e in internal]
        if not opts:
            raise ValueError("no internal edge left to carry the regular vertex")
        counts = {e: sum(1 for x in new_chi.values() if x == e) for e in opts}
        pref = [e for e in opts if e in repoint_pref]
        # prefer the merged edge, then the edge with the largest remaining rho
        pick = pref[0] if pref else min(opts, key=lambda e: (counts[e], e))
        new_chi[nv] = pick
    rho = [0] * n_edges
    for e in internal:
        rho[e] = 2
    for e in new_chi.values():
        rho[e] -= 1
    theta = tuple(r + s for r, s in zip(rho, sigma))
    chi = tuple(sorted(new_chi.items()))
    return ThetaWeight(theta, tuple(rho), tuple(sigma), chi), repaired


def reduce_leg(tree: WeightedTree, weight: ThetaWeight, leg: int, w) -> LegReduction:
    """Remove one loop leg (leaf `leg`, not the reference leaf) and its vertex.

    The two remaining edges e1 = chi(v) and e2 at that vertex v become one
    edge {u1, u2}; weights follow the three cases rho(e1) = 1,
    rho(e1) = 0 < rho(e2) and rho(e1) = rho(e2) = 0.
    """
    topo = tree.topology
    n = topo.n
    if leg == 0 or not 0 < leg < n:
        raise ValueError("the leg must be a non-reference leaf")
    if w[leg] != 0:
        raise ValueError("the removed leg must carry no derivative")
    v = topo.other_end(leg, leg)
    chi = dict(weight.chi)
    if v in tree.hollow:
        raise ValueError("leg reduction needs a regular vertex")
    e1 = chi[v]
    e2 = [e for e in topo.incident(v) if e not in (leg, e1)][0]
    u1 = topo.other_end(e1, v)
    u2 = topo.other_end(e2, v)
    rho1, rho2 = weight.rho[e1], weight.rho[e2]
    if rho1 == 1:
        case = "rho(e1)=1"
    elif rho2 > 0:
        case = "rho(e1)=0,rho(e2)>0"
    else:
        case = "rho(e1)=rho(e2)=0"

    def rename_leaf(x):
        if isinstance(x, (int, np.integer)) and x < n:
            return x if x < leg else x - 1
        return ("v", x)

    edges = []
    origin = []
    for e, (a, b) in enumerate(topo.edges):
        if e in (leg, e1, e2):
            continue
        edges.append((rename_leaf(a), rename_leaf(b)))
        origin.append(e)
    edges.append((rename_leaf(u1), rename_leaf(u2)))
    origin.append(None)
    new_topo, emap_pos, vmap_raw = Topology.from_edges(n - 1, edges)
    emap = {origin[i]: emap_pos[i] for i in range(len(origin)) if origin[i] is not None}
    merged_edge = emap_pos[len(origin) - 1]
    vmap = {}
    for x in topo.internal_vertices:
        if x != v:
            vmap[x] = vmap_raw[("v", x)]
    labels = tree.labels[:leg] + tree.labels[leg + 1:]
    stars = [0] * len(new_topo.edges)
    for old_e, new_e in emap.items():
        stars[new_e] += tree.stars[old_e]
    stars[merged_edge] += tree.stars[e1] + tree.stars[e2]
    hollow = frozenset(new_topo.internal_vertices) if n - 1 == 3 else frozenset(vmap[x] for x in tree.hollow)
    new_tree = WeightedTree(new_topo, labels, hollow, tuple(stars))
    if n - 1 == 3:
        weight_chi = ThetaWeight(weight.theta, weight.rho, weight.sigma, ())
    else:
        weight_chi = weight
    new_w, _ = _rebuild_weight(
        new_topo, emap, vmap, tree, weight_chi, {e1: merged_edge, e2: merged_edge},
        {leg, e1, e2}, {v}, {merged_edge},
    )
    if n - 1 == 3:
        new_w = ThetaWeight(new_w.sigma, (0,) * len(new_w.sigma), new_w.sigma, ())
    w_new = tuple(w[:leg]) + tuple(w[leg + 1:])
    member = new_w.theta in {t.theta for t in theta_set(new_tree, w_new)}
    return LegReduction(new_tree, new_w, case, member)


def _drop_cherry(tree: WeightedTree, weight: ThetaWeight, a: int, b: int, w):
    """Both loop legs sit on one vertex v: drop them, v and its third edge, then
    smooth the neighbour u of v."""
    topo = tree.topology
    n = topo.n
    v = topo.other_end(a, a)
    e = [x for x in topo.incident(v) if x not in (a, b)][0]
    u = topo.other_end(e, v)
    ea, eb = [x for x in topo.incident(u) if x != e]
    x_end = topo.other_end(ea, u)
    y_end = topo.other_end(eb, u)
    removed = {a, b}

    def rename_leaf(x):
        if isinstance(x, (int, np.integer)) and x < n:
            return x - sum(1 for r in removed if r < x)
        return ("v", x)

    edges = []
    origin = []
    for k, (p, q) in enumerate(topo.edges):
        if k in (a, b, e, ea, eb):
            continue
        edges.append((rename_leaf(p), rename_leaf(q)))
        origin.append(k)
    edges.append((rename_leaf(x_end), rename_leaf(y_end)))
    origin.append(None)
    new_n = n - 2
    new_topo, emap_pos, vmap_raw = Topology.from_edges(new_n, edges)
    emap = {origin[i]: emap_pos[i] for i in range(len(origin)) if origin[i] is not None}
    merged_edge = emap_pos[len(origin) - 1]
    vmap = {x: vmap_raw[("v", x)] for x in topo.internal_vertices if x not in (u, v)}
    labels = tuple(lab for i, lab in enumerate(tree.labels) if i not in removed)
    stars = [0] * len(new_topo.edges)
    for old_e, new_e in emap.items():
        stars[new_e] += tree.stars[old_e]
    stars[merged_edge] += tree.stars[ea] + tree.stars[eb]
    hollow = frozenset(new_topo.internal_vertices) if new_n == 3 else frozenset()
    new_tree = WeightedTree(new_topo, labels, hollow, tuple(stars))
    if new_n == 3:
        sigma = [0] * len(new_topo.edges)
        for old_e, new_e in emap.items():
            sigma[new_e] += weight.sigma[old_e]
        sigma[merged_edge] += weight.sigma[ea] + weight.sigma[eb]
        new_w = ThetaWeight(tuple(sigma), (0,) * len(sigma), tuple(sigma), ())
    else:
        new_w, _ = _rebuild_weight(
            new_topo, emap, vmap, tree, weight, {ea: merged_edge, eb: merged_edge},
            {a, b, e}, {u, v}, {merged_edge},
        )
    w_new = tuple(x for i, x in enumerate(w) if i not in removed)
    member = new_w.theta in {t.theta for t in theta_set(new_tree, w_new)}
    return LegReduction(new_tree, new_w, "v=vbar", member)


@dataclass
class ReductionResult:
    tree_f: WeightedTree
    weight_f: ThetaWeight
    w_f: tuple
    steps: list


def reduce_tree(tree: WeightedTree, weight: ThetaWeight, w, zeta: int, zetabar: int) -> ReductionResult:
    """Remove the loop legs zeta and zetabar of tree_i and return tree_f."""
    n = tree.n
    if n <= 4:
        raise ValueError("reduction needs more than four leaves")
    if weight.total <= 2:
        raise ValueError("reduction needs total theta weight above 2")
    if tree.hollow:
        raise ValueError("reduction acts on trees with regular vertices only")
    if 0 in (zeta, zetabar) or zeta == zetabar:
        raise ValueError("loop legs must be two distinct non-reference leaves")
    w = tuple(w)
    topo = tree.topology
    if topo.other_end(zeta, zeta) == topo.other_end(zetabar, zetabar):
        step = _drop_cherry(tree, weight, min(zeta, zetabar), max(zeta, zetabar), w)
        w_f = tuple(x for i, x in enumerate(w) if i not in (zeta, zetabar))
        return ReductionResult(step.tree, step.weight, w_f, [step])
    first = reduce_leg(tree, weight, zeta, w)
    w1 = w[:zeta] + w[zeta + 1:]
    zb = zetabar if zetabar < zeta else zetabar - 1
    second = reduce_leg(first.tree, first.weight, zb, w1)
    w_f = w1[:zb] + w1[zb + 1:]
    return ReductionResult(second.tree, second.weight, w_f, [first, second])


def restricted_config(cfg_rest, legs, n):
    """Insert zero momenta at the loop-leg positions of an n-point config."""
    M = cfg_rest.M
    p = []
    it = iter(cfg_rest.p)
    for i in range(n):
        p.append(np.zeros(4) if i in legs else next(it))
    p = np.asarray(p)
    return MomentumConfig.from_independent(p[1:], M)


def log_polynomial(lam: float, p_norm: float, M: float, k: int) -> float:
    """P^lam_k at eta = 0 with unit coefficients:
    sum_{j<=k} log+(max(|p|, M)/lam)^j + sum_{1<=j<=k} log+(lam/M)^j."""
    x = math.log(max(max(p_norm, M) / lam, 1.0))
    y = math.log(max(lam / M, 1.0))
    return sum(x**j for j in range(k + 1)) + sum(y**j for j in range(1, k + 1))


@dataclass
class ReductionCheck:
    lhs: float
    rhs: float  # Pi_{tau_f} P_{k+1} at Lam, without constant
    ratio: float


def reduction_inequality(tree: WeightedTree, weight: ThetaWeight, w, zeta: int, zetabar: int,
                         cfg_rest: MomentumConfig, Lam: float, Lam0: float, k: int = 0,
                         result: ReductionResult | None = None, tol: float = 1e-10) -> ReductionCheck:
    """Both sides of the irrelevant-term reduction for one theta weight.

    lhs = int_Lam^Lam0 dlam lam Pi_{tau_i, theta}(restricted p) P^lam_k,
    rhs = Pi_{tau_f, theta_f}(p) P^Lam_{k+1}; the inequality holds with a
    constant, so callers compare ratios across samples.
    """
    from .quadrature import quad

    if result is None:
        result = reduce_tree(tree, weight, w, zeta, zetabar)
    cfg_full = restricted_config(cfg_rest, (zeta, zetabar), tree.n)
    norms_i = _edge_norms(tree, cfg_full)
    th_i = np.asarray(weight.theta, dtype=float)
    p_norm = cfg_rest.norm
    M = cfg_rest.M

    def integrand(lam):
        return lam * float(np.prod((lam + norms_i) ** (-th_i))) * log_polynomial(lam, p_norm, M, k)

    brk = sorted({x for x in (M, max(p_norm, M), *norms_i) if Lam < x < Lam0})
    lhs = quad(integrand, Lam, Lam0, tol=tol, points=brk or None)
    rhs = amplitude_Pi(result.tree_f, result.weight_f, cfg_rest, Lam) * log_polynomial(Lam, p_norm, M, k + 1)
    return ReductionCheck(lhs, rhs, lhs / rhs)


REDUCTION_INFLATE = 2.0


def _reduction_pool(n: int, ws):
    pool = {}
    for t in enumerate_trees(["A"] * n):
        for w in ws:
            for tw in theta_set(t, w):
                if tw.total <= 2:
                    continue
                res = reduce_tree(t, tw, w, n - 2, n - 1)
                pool.setdefault(res.steps[0].case, []).append((t, tw, tuple(w), res))
    return pool


def _reduction_ratios(items, rng, samples: int, n: int):
    out = []
    for _ in range(samples):
        t, tw, w, res = items[rng.integers(len(items))]
        scale = float(np.exp(rng.uniform(-3, 3)))
        cfg = MomentumConfig.from_independent(rng.normal(size=(n - 3, 4)) * scale)
        lam = float(np.exp(rng.uniform(-4, 4)))
        k = int(rng.integers(0, 3))
        chk = reduction_inequality(t, tw, w, n - 2, n - 1, cfg, lam, 1e4 * max(lam, 1.0), k=k, result=res)
        out.append(chk.ratio)
    return np.asarray(out)


def reduction_sweep(n: int = 6, ws=((0, 1, 1, 0, 0, 0), (0, 2, 0, 0, 0, 0), (0, 0, 1, 1, 0, 0)),
                    samples: int = 100, seed: int = 0) -> dict:
    """Per reduction case: fit the constant on one random sample, inflate it,
    then count violations on a fresh sample of the same size."""
    rng = np.random.default_rng(seed)
    pool = _reduction_pool(n, ws)
    report = {}
    for case in sorted(pool):
        fit = _reduction_ratios(pool[case], rng, samples, n)
        const = REDUCTION_INFLATE * float(fit.max())
        fresh = _reduction_ratios(pool[case], rng, samples, n)
        report[case] = {
            "weights": len(pool[case]),
            "fitted_constant": const,
            "fresh_max_ratio": float(fresh.max()),
            "violations": int(np.sum(fresh > const)),
        }
    return report


def _junction_fragments():
    regular = [Fragment.from_tree(t, w) for t in enumerate_trees(["A"] * 4)
               for w in ((0, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0))]
    hollow = [Fragment.from_tree(t, (0, 0, 0)) for t in enumerate_trees(["A"] * 3, 1)]
    return regular, hollow


def junction_sweep(samples: int = 100, seed: int = 0) -> dict:
    """Random fragment pairs per join type; verified means the expanded product
    of fragment amplitudes is at most the merged amplitude (no tolerance)."""
    rng = np.random.default_rng(seed)
    regular, hollow = _junction_fragments()
    kinds = {"regular-regular": (regular, regular), "regular-hollow": (regular, hollow),
             "hollow-regular": (hollow, regular), "hollow-hollow": (hollow, hollow)}
    report = {}
    for name, (left, right) in kinds.items():
        violations = 0
        labels = set()
        for _ in range(samples):
            a = left[rng.integers(len(left))]
            b = right[rng.integers(len(right))]
            n = a.n + b.n - 2
            scale = float(np.exp(rng.uniform(-2, 2)))
            cfg = MomentumConfig.from_independent(rng.normal(size=(n - 1, 4)) * scale)
            lam = float(np.exp(rng.uniform(-3, 3)))
            res = junction_bound([a, b], cfg, lam)
            labels.add(res.cases[0])
            violations += not res.verified
        report[name] = {"samples": samples, "violations": violations, "cases": sorted(labels)}
    return report


def theta_sweep(n_min: int = 3, n_max: int = 6, w_max: int = 3) -> dict:
    """Exhaustive check of the total-weight rule.

    Every label sequence over FIELD_TYPES is enumerated and must give the
    same topology set; theta sets depend on the topology and hollow flags
    only, so the weight rule is checked once per (topology, w).
    """
    from .momenta import multi_indices

    label_sequences = 0
    trees = 0
    weights = 0
    violations = []
    for n in range(n_min, n_max + 1):
        ref = {t.key for t in topologies(n)}
        for labels in itertools.product(FIELD_TYPES, repeat=n):
            found = enumerate_trees(labels)
            label_sequences += 1
            trees += len(found)
            if {t.topology.key for t in found} != ref:
                violations.append({"labels": list(labels), "problem": "topology set differs"})
        if n < 4:
            continue
        for topo in topologies(n):
            tree = make_tree(topo, ["A"] * n)
            for total in range(w_max + 1):
                for w in multi_indices(n, total):
                    for tw in theta_set(tree, w):
                        weights += 1
                        if tw.total != n + total - 4:
                            violations.append({"topology": str(topo.key), "w": list(w), "theta": list(tw.theta)})
    return {"label_sequences": label_sequences, "trees": trees, "weights": weights,
            "violations": violations}
