"""Chains of vertex functions closing a loop through one differentiated propagator.

A chain is an ordered sequence of vertex factors Gamma^{zeta_j Psi_j zetabar_j}.
Each factor carries a subset Psi_j of the external fields plus two loop legs.
Neighbouring factors are linked by a propagator joining zetabar_{j-1} with
zeta_j, and the loop is closed by the differentiated propagator joining
zetabar_m with zeta_1.  A gauge propagator links (A, A); a ghost propagator
links (c, cb) or (cb, c).
"""
from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

LOOP_FIELDS = ("A", "c", "cb")
GHOST_NUMBER = {"A": 0, "c": 1, "cb": -1}
FERMIONS = {"c", "cb"}
LINKS = {("A", "A"), ("c", "cb"), ("cb", "c")}
MAX_EXTERNAL = 6

_ALIASES = {"A": "A", "c": "c", "cb": "cb", "cbar": "cb", "C": "cb"}


def parse_fields(spec) -> tuple:
    """Accept a sequence of labels or a compact string such as 'AAccb'.

    In compact strings a lowercase 'c' followed by 'b' is an antighost; the
    spelling 'AAcc' used on the command line is read as A, A, c, cb (the last
    c stands for the antighost so that ghost number vanishes).
    """
    if isinstance(spec, str):
        if " " in spec or "," in spec:
            items = [x for x in spec.replace(",", " ").split() if x]
            return tuple(_alias(x) for x in items)
        out = []
        i = 0
        while i < len(spec):
            if spec[i] == "c" and spec[i + 1:i + 2] == "b":
                out.append("cb")
                i += 2
            else:
                out.append(_alias(spec[i]))
                i += 1
        # shorthand: equal numbers of bare c's with no cb -> second half are antighosts
        if "cb" not in out and out.count("c") % 2 == 0 and out.count("c") > 0:
            idx = [k for k, x in enumerate(out) if x == "c"]
            for k in idx[len(idx) // 2:]:
                out[k] = "cb"
        return tuple(out)
    return tuple(_alias(x) for x in spec)


def _alias(x):
    if x not in _ALIASES:
        raise ValueError(f"unsupported field label {x!r}; chains use A, c, cb")
    return _ALIASES[x]


def link_ok(zetabar_prev: str, zeta_next: str) -> bool:
    return (zeta_next, zetabar_prev) in LINKS


@dataclass(frozen=True)
class Chain:
    kind: str  # 'gauge' (closing propagator C) or 'ghost' (closing propagator S)
    parts: tuple  # tuple of tuples of external indices
    zeta: tuple
    zetabar: tuple
    labels: tuple  # external field labels
    sign: int = 1
    w_split: tuple | None = field(default=None, compare=False)

    @property
    def length(self) -> int:
        return len(self.parts)

    def vertex(self, j):
        """(zeta_j, external labels of part j, zetabar_j)."""
        return (self.zeta[j], tuple(self.labels[i] for i in self.parts[j]), self.zetabar[j])

    def vertices(self):
        return tuple(self.vertex(j) for j in range(self.length))

    def content_key(self):
        """Labels-only form of the chain, forward orientation."""
        return (self.kind, tuple((z, tuple(sorted(e)), zb) for z, e, zb in self.vertices()))

    def reversed(self) -> "Chain":
        m = self.length
        return Chain(self.kind, tuple(self.parts[j] for j in reversed(range(m))),
                     tuple(self.zetabar[j] for j in reversed(range(m))),
                     tuple(self.zeta[j] for j in reversed(range(m))), self.labels,
                     _sign(self.labels, tuple(self.parts[j] for j in reversed(range(m)))))

    def reversal_key(self):
        fw = self.content_key()
        rv = self.reversed().content_key()
        return min(fw, rv)

    def partition_key(self):
        """Dotted kind plus the unordered multiset partition of the external labels."""
        return (self.kind, tuple(sorted(tuple(sorted(self.labels[i] for i in p)) for p in self.parts)))

    def notation(self) -> str:
        dot = "Cdot" if self.kind == "gauge" else "Sdot"
        body = " ".join(f"G[{z}|{''.join(e) or '-'}|{zb}]" for z, e, zb in self.vertices())
        return f"{dot} {body}"

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "parts": [list(p) for p in self.parts],
            "vertices": [{"zeta": z, "external": list(e), "zetabar": zb} for z, e, zb in self.vertices()],
            "sign": self.sign,
            "notation": self.notation(),
        }
        if self.w_split is not None:
            d["w_split"] = [list(x) for x in self.w_split]
        return d


def _sign(labels, parts) -> int:
    """Parity of the permutation bringing fermionic externals into chain order."""
    order = [i for p in parts for i in p if labels[i] in FERMIONS]
    inv = sum(1 for a in range(len(order)) for b in range(a + 1, len(order)) if order[a] > order[b])
    return -1 if inv % 2 else 1


def ordered_partitions(n: int, allow_empty: bool = False, max_parts: int | None = None):
    """Ordered sequences of disjoint subsets covering range(n)."""
    top = n if max_parts is None else max_parts
    for m in range(1, top + 1):
        for assign in itertools.product(range(m), repeat=n):
            used = set(assign)
            if not allow_empty and len(used) != m:
                continue
            yield tuple(tuple(i for i in range(n) if assign[i] == j) for j in range(m))
    if allow_empty and n == 0:
        yield ((),)


def enumerate_chains(external, w_total=None, mode: str = "reduced", dedup: str = "presentation",
                     vertex_legs=None, max_parts: int | None = None) -> list:
    """Chains with the given external fields.

    mode 'reduced' uses ordered partitions into nonempty parts, so no factor is
    a two-point function; mode 'division' also allows empty parts (then
    max_parts bounds the chain length, default the number of externals).
    dedup 'none' keeps every oriented chain, 'reversal' identifies a chain with
    its reverse, 'presentation' keeps one chain per dotted kind and unordered
    partition of the external labels.
    vertex_legs optionally restricts the total leg count of every factor.
    """
    labels = parse_fields(external)
    n = len(labels)
    if n > MAX_EXTERNAL:
        raise ValueError(f"at most {MAX_EXTERNAL} external fields are supported")
    if mode not in ("reduced", "division"):
        raise ValueError("mode must be 'reduced' or 'division'")
    if dedup not in ("none", "reversal", "presentation"):
        raise ValueError("dedup must be 'none', 'reversal' or 'presentation'")
    if mode == "division" and max_parts is None:
        max_parts = max(n, 1)
    parts_iter = ordered_partitions(n, allow_empty=(mode == "division"), max_parts=max_parts)
    legs_allowed = set(vertex_legs) if vertex_legs is not None else None

    found = []
    for parts in parts_iter:
        m = len(parts)
        if legs_allowed is not None and any(len(p) + 2 not in legs_allowed for p in parts):
            continue
        ext_gh = [sum(GHOST_NUMBER[labels[i]] for i in p) for p in parts]
        for legs in itertools.product(LOOP_FIELDS, repeat=2 * m):
            zs, zbs = legs[0::2], legs[1::2]
            if any(GHOST_NUMBER[zs[j]] + GHOST_NUMBER[zbs[j]] + ext_gh[j] for j in range(m)):
                continue
            if not all(link_ok(zbs[j - 1], zs[j]) for j in range(1, m)):
                continue
            if not link_ok(zbs[-1], zs[0]):
                continue
            kind = "gauge" if zs[0] == "A" else "ghost"
            found.append(Chain(kind, parts, zs, zbs, labels, _sign(labels, parts)))

    # keys are built from labels, so index assignments of identical labels merge too
    if dedup != "none":
        key = Chain.reversal_key if dedup == "reversal" else Chain.partition_key
        uniq = {}
        for ch in sorted(found, key=lambda c: (c.length, c.reversal_key())):
            uniq.setdefault(key(ch), ch)
        found = list(uniq.values())

    if w_total is not None:
        w_total = tuple(w_total)
        if len(w_total) != n:
            raise ValueError("w_total must have one entry per external field")
        found = [Chain(c.kind, c.parts, c.zeta, c.zetabar, c.labels, c.sign,
                       tuple(tuple(w_total[i] for i in p) for p in c.parts)) for c in found]
    found.sort(key=lambda c: (c.kind, c.length, c.reversal_key()))
    return found


def distribute_w(w: Sequence[int], m: int):
    """All ways of splitting a multi-index into m nonnegative summands."""
    w = tuple(w)
    per_entry = []
    for x in w:
        opts = [c for c in itertools.product(range(x + 1), repeat=m) if sum(c) == x]
        per_entry.append(opts)
    for combo in itertools.product(*per_entry):
        yield tuple(tuple(combo[i][j] for i in range(len(w))) for j in range(m))


def ghost_balanced(chain: Chain) -> bool:
    """Ghost number vanishes at every factor and overall."""
    return all(GHOST_NUMBER[z] + GHOST_NUMBER[zb] + sum(GHOST_NUMBER[x] for x in e) == 0
               for z, e, zb in chain.vertices())
