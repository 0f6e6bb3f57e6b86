"""R-couplings and left-partial R-couplings between finite sub-distributions.

Existence is decided by an exact max-flow over the bipartite network

    source --mu1(a)--> a --(a,b) in R--> b --mu2(b)--> sink

scaled to integers by the common denominator of all weights.  An exact
coupling exists iff the masses agree and the flow saturates them; a
left-partial coupling asks only that the flow equal mass(mu1).  The flow
on the R-edges is the joint distribution, returned as a checkable
witness rather than a bare boolean.

`strassen_oracle` re-decides existence from the subset condition
(mu1(S) <= mu2(R(S)) for every S) by brute force; it exists purely to
cross-examine the flow checker and is only usable on small supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Hashable, Iterable, Optional

from .subdist import SubDistr, dret

A = Hashable
B = Hashable


@dataclass(frozen=True)
class Relation:
    """A finite relation, materialized as an explicit pair set.

    `left` and `right` are the admissible supports; `pairs` must stay
    inside their product.
    """

    left: frozenset
    right: frozenset
    pairs: frozenset

    def __post_init__(self):
        for a, b in self.pairs:
            if a not in self.left or b not in self.right:
                raise ValueError("relation pair outside declared supports")

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[A, B]]) -> "Relation":
        ps = frozenset(pairs)
        return Relation(frozenset(a for a, _ in ps),
                        frozenset(b for _, b in ps), ps)

    @staticmethod
    def from_predicate(left: Iterable[A], right: Iterable[B],
                       pred: Callable[[A, B], bool]) -> "Relation":
        ls, rs = frozenset(left), frozenset(right)
        return Relation(ls, rs,
                        frozenset((a, b) for a in ls for b in rs if pred(a, b)))

    @staticmethod
    def identity_over(values: Iterable) -> "Relation":
        vs = frozenset(values)
        return Relation(vs, vs, frozenset((v, v) for v in vs))

    def contains(self, a: A, b: B) -> bool:
        return (a, b) in self.pairs

    def image(self, subset: Iterable[A]) -> frozenset:
        ss = set(subset)
        return frozenset(b for a, b in self.pairs if a in ss)


@dataclass(frozen=True)
class CouplingWitness:
    joint: SubDistr
    mode: str  # "exact" | "left-partial"

    def __post_init__(self):
        if self.mode not in ("exact", "left-partial"):
            raise ValueError(f"unknown witness mode {self.mode!r}")

    def left_marginal(self) -> SubDistr:
        out: dict = {}
        for (a, _), p in self.joint.items():
            out[a] = out.get(a, Fraction(0)) + p
        return SubDistr(out)

    def right_marginal(self) -> SubDistr:
        out: dict = {}
        for (_, b), p in self.joint.items():
            out[b] = out.get(b, Fraction(0)) + p
        return SubDistr(out)


# -- exact max-flow (Dinic) on integer capacities


class _FlowNet:
    def __init__(self, n: int):
        self.adj: list[list[list[int]]] = [[] for _ in range(n)]

    def add_edge(self, u: int, v: int, cap: int) -> tuple[int, int]:
        self.adj[u].append([v, cap, len(self.adj[v])])
        self.adj[v].append([u, 0, len(self.adj[u]) - 1])
        return u, len(self.adj[u]) - 1

    def max_flow(self, s: int, t: int) -> int:
        flow = 0
        while True:
            level = self._bfs(s, t)
            if level is None:
                return flow
            it = [0] * len(self.adj)
            while True:
                pushed = self._dfs(s, t, None, level, it)
                if pushed == 0:
                    break
                flow += pushed

    def _bfs(self, s: int, t: int) -> Optional[list[int]]:
        level = [-1] * len(self.adj)
        level[s] = 0
        queue = [s]
        for u in queue:
            for v, cap, _ in self.adj[u]:
                if cap > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def _dfs(self, u: int, t: int, limit: Optional[int],
             level: list[int], it: list[int]) -> int:
        if u == t:
            return limit if limit is not None else 0
        while it[u] < len(self.adj[u]):
            edge = self.adj[u][it[u]]
            v, cap, rev = edge
            if cap > 0 and level[v] == level[u] + 1:
                nxt = cap if limit is None else min(limit, cap)
                pushed = self._dfs(v, t, nxt, level, it)
                if pushed > 0:
                    edge[1] -= pushed
                    self.adj[v][rev][1] += pushed
                    return pushed
            it[u] += 1
        level[u] = -1
        return 0


def _solve_flow(mu1: SubDistr, mu2: SubDistr,
                rel: Relation) -> tuple[Fraction, dict]:
    """Max flow through the coupling network, plus the R-edge flows.

    Returns (flow value, {(a, b): weight}) in unscaled rationals.
    """
    left = sorted(mu1.support(), key=repr)
    right = sorted(mu2.support(), key=repr)
    denoms = [p.denominator for _, p in mu1.items()]
    denoms += [p.denominator for _, p in mu2.items()]
    scale = lcm(*denoms) if denoms else 1

    n = len(left) + len(right) + 2
    src, snk = 0, n - 1
    lidx = {a: 1 + i for i, a in enumerate(left)}
    ridx = {b: 1 + len(left) + i for i, b in enumerate(right)}
    net = _FlowNet(n)
    for a in left:
        net.add_edge(src, lidx[a], int(mu1.get(a) * scale))
    for b in right:
        net.add_edge(ridx[b], snk, int(mu2.get(b) * scale))
    edge_refs = {}
    for a in left:
        for b in right:
            if rel.contains(a, b):
                edge_refs[(a, b)] = net.add_edge(lidx[a], ridx[b], scale)

    flow = net.max_flow(src, snk)
    joint = {}
    for (a, b), (u, i) in edge_refs.items():
        used = scale - net.adj[u][i][1]
        if used:
            joint[(a, b)] = Fraction(used, scale)
    return Fraction(flow, scale), joint


def check_coupling(mu1: SubDistr, mu2: SubDistr,
                   rel: Relation) -> Optional[CouplingWitness]:
    """Witness of an exact R-coupling of mu1 and mu2, or None."""
    if mu1.mass() != mu2.mass():
        return None
    flow, joint = _solve_flow(mu1, mu2, rel)
    if flow != mu1.mass():
        return None
    return CouplingWitness(SubDistr(joint), "exact")


def check_left_partial(mu1: SubDistr, mu2: SubDistr,
                       rel: Relation) -> Optional[CouplingWitness]:
    """Witness of a left-partial R-coupling (left marginal exact,
    right marginal pointwise bounded by mu2), or None."""
    flow, joint = _solve_flow(mu1, mu2, rel)
    if flow != mu1.mass():
        return None
    return CouplingWitness(SubDistr(joint), "left-partial")


def verify_witness(w: CouplingWitness, mu1: SubDistr, mu2: SubDistr,
                   rel: Relation) -> bool:
    """Independent certificate check: support inclusion + marginal laws."""
    for pair in w.joint.support():
        if not (isinstance(pair, tuple) and len(pair) == 2
                and rel.contains(*pair)):
            return False
    if w.left_marginal() != mu1:
        return False
    right = w.right_marginal()
    if w.mode == "exact":
        return right == mu2
    return all(right.get(b) <= mu2.get(b) for b in right.support())


def couple_ret(a: A, b: B, rel: Relation) -> Optional[CouplingWitness]:
    """Point witness for ret a vs ret b, when (a, b) is admissible."""
    if not rel.contains(a, b):
        return None
    return CouplingWitness(dret((a, b)), "exact")


def couple_bind(w: CouplingWitness,
                kernel: Callable[[A, B], Optional[CouplingWitness]]
                ) -> CouplingWitness:
    """Compose a coupling with per-pair continuation couplings.

    The input witness must be exact (a left-partial left side would not
    certify anything about the bound left distribution).  Continuations
    may be exact or left-partial; one left-partial continuation makes
    the composite left-partial.
    """
    if w.mode != "exact":
        raise ValueError("couple_bind needs an exact witness on the left")
    out: dict = {}
    mode = "exact"
    for (a, b), p in w.joint.items():
        kw = kernel(a, b)
        if kw is None:
            raise ValueError(f"kernel undefined on support pair ({a!r}, {b!r})")
        if kw.mode != "exact":
            mode = "left-partial"
        for pair, q in kw.joint.items():
            out[pair] = out.get(pair, Fraction(0)) + p * q
    return CouplingWitness(SubDistr(out), mode)


def bijection_coupling(n: int, f: Callable[[int], int]) -> CouplingWitness:
    """Couple uniform{0..n} with itself along a permutation f."""
    outs = list(range(n + 1))
    image = sorted(f(i) for i in outs)
    if image != outs:
        raise ValueError(f"f is not a permutation of 0..{n}")
    w = Fraction(1, n + 1)
    return CouplingWitness(SubDistr({(i, f(i)): w for i in outs}), "exact")


def strassen_oracle(mu1: SubDistr, mu2: SubDistr, rel: Relation,
                    mode: str = "exact") -> bool:
    """Subset-condition decision, by enumeration.  Left support <= 12.

    exact: mass(mu1) = mass(mu2) and mu1(S) <= mu2(R(S)) for all S;
    left-partial: the subset condition alone.
    """
    if mode not in ("exact", "left-partial"):
        raise ValueError(f"unknown mode {mode!r}")
    left = sorted(mu1.support(), key=repr)
    if len(left) > 12:
        raise ValueError("strassen_oracle: left support too large")
    if mode == "exact" and mu1.mass() != mu2.mass():
        return False

    right = sorted(mu2.support(), key=repr)
    ridx = {b: i for i, b in enumerate(right)}
    nb = []
    for a in left:
        m = 0
        for (x, y) in rel.pairs:
            if x == a and y in ridx:
                m |= 1 << ridx[y]
        nb.append(m)
    w1 = [mu1.get(a) for a in left]
    w2 = [mu2.get(b) for b in right]

    total = 1 << len(left)
    sums = [Fraction(0)] * total
    nbrs = [0] * total
    for mask in range(1, total):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        sums[mask] = sums[rest] + w1[low]
        nbrs[mask] = nbrs[rest] | nb[low]
    image_mass: dict[int, Fraction] = {0: Fraction(0)}

    def mass_of(m: int) -> Fraction:
        got = image_mass.get(m)
        if got is None:
            got = sum((w2[i] for i in range(len(right)) if m >> i & 1),
                      Fraction(0))
            image_mass[m] = got
        return got

    return all(sums[mask] <= mass_of(nbrs[mask]) for mask in range(total))


def extract_equality(mu1: SubDistr, mu2: SubDistr) -> bool:
    return mu1 == mu2


def extract_pointwise_le(mu1: SubDistr, mu2: SubDistr) -> bool:
    return all(mu1.get(a) <= mu2.get(a) for a in mu1.support())
