"""Covariance-aware conditioned evaluation of beta-labelled circuits.

This is the library's main inference engine.  Instead of propagating each
node's uncertainty in isolation (as the moment-matching baseline does), it
tracks the full covariance structure between circuit nodes, which makes the
deterministic-OR sum exact in both mean and variance and keeps the final
conditioning division aware of the correlation between its numerator and
denominator.

The computation has two phases:

1. *Shadowing* (``shadow_circuit``): the leaves carrying the negated query
   literal, together with all their ancestors up to the root, are
   duplicated into "shadow" nodes.  The shadow copy of a negated-query
   leaf is a stub pinned to 0, so the shadow root computes the joint of
   query and evidence while the untouched base root computes the evidence.
   Non-ancestor nodes are shared between the two chains, which is exactly
   what lets the evaluator measure the covariance between numerator and
   denominator.

2. *Covariance sweep* (``eval_cov``): one topological pass computes, for
   every node n, its mean E[n] and its covariance row cov[n, z] against
   every other node z:

   * OR gates (children mutually exclusive, so the sum is literal):
       E[n]      = sum_c E[c]
       cov[n,z]  = sum_c cov[c,z]
       var[n]    = sum_c sum_c' cov[c,c']
   * AND gates (first-order expansion of the product around the means,
     with weights w_c = prod_{c' != c} E[c'], i.e. E[n]/E[c] away from
     zero means):
       E[n]      = prod_c E[c]
       cov[n,z]  = sum_c w_c cov[c,z]
       var[n]    = sum_c sum_c' w_c w_c' cov[c,c']

   Finally, with X the shadow-root value (query and evidence) and Y the
   base-root value (evidence), the conditional mean is E[X]/E[Y] and the
   variance is the first-order expansion of X/Y around the means:

       var = var[X]/E[Y]^2 + E[X]^2 var[Y]/E[Y]^4
             - 2 E[X] cov[X,Y]/E[Y]^3

   clamped to the [0,1]-support bound before beta moment matching.

``eval_cov_streaming`` computes bit-identical results while keeping only
the covariance rows of *live* nodes (those with unevaluated parents),
which bounds memory on deep, narrow circuits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import betacalc
from .betacalc import BetaLabel, Moments
from .circuit import Circuit, CircuitError, LabelTable, NodeKind
from .semirings import InconsistentEvidenceError


# ---------------------------------------------------------------------
# Leaf covariance
# ---------------------------------------------------------------------

class LeafCovariance:
    """Covariance structure over leaf literals.

    The diagonal blocks are always implied by the labels: a literal with
    itself has its label variance, and a literal with its complement has
    the negated variance (they are the same random variable, flipped).
    Cross-variable entries default to 0 (independent leaves) and can be
    supplied explicitly as (literal, literal, covariance) triplets; the
    complement-flip rule extends each supplied entry to the other three
    sign combinations.
    """

    def __init__(self, entries: Optional[dict[tuple[int, int], float]] = None):
        self._entries: dict[tuple[int, int], float] = {}
        for (li, lj), v in (entries or {}).items():
            self.set(li, lj, v)

    def set(self, lit_i: int, lit_j: int, value: float) -> None:
        if abs(lit_i) == abs(lit_j):
            raise ValueError(
                "diagonal blocks are implied by the labels; "
                f"cannot set cov[{lit_i},{lit_j}]")
        key, sign = self._normalize(lit_i, lit_j)
        self._entries[key] = sign * value

    @staticmethod
    def _normalize(lit_i: int, lit_j: int) -> tuple[tuple[int, int], float]:
        sign = (1.0 if lit_i > 0 else -1.0) * (1.0 if lit_j > 0 else -1.0)
        vi, vj = abs(lit_i), abs(lit_j)
        if vi > vj:
            vi, vj = vj, vi
        return (vi, vj), sign

    def lookup(self, labels: LabelTable, lit_i: int, lit_j: int) -> float:
        if lit_i == lit_j:
            return labels.variance_of(lit_i)
        if lit_i == -lit_j:
            return -labels.variance_of(lit_i)
        key, sign = self._normalize(lit_i, lit_j)
        return sign * self._entries.get(key, 0.0)

    @property
    def cross_entries(self) -> dict[tuple[int, int], float]:
        return dict(self._entries)


def parse_leaf_cov(text: str) -> LeafCovariance:
    """Parse triplet lines ``lit_i lit_j cov`` into a LeafCovariance."""
    cov = LeafCovariance()
    for i, raw in enumerate(text.splitlines(), start=1):
        ln = raw.strip()
        if not ln or ln.startswith("#"):
            continue
        toks = ln.split()
        if len(toks) != 3:
            raise CircuitError(f"leaf covariance line {i}: expected 3 fields")
        try:
            cov.set(int(toks[0]), int(toks[1]), float(toks[2]))
        except ValueError as exc:
            raise CircuitError(f"leaf covariance line {i}: {exc}") from exc
    return cov


def format_leaf_cov(cov: LeafCovariance) -> str:
    out = [f"{i} {j} {v!r}" for (i, j), v in sorted(cov.cross_entries.items())]
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------------
# Shadowing
# ---------------------------------------------------------------------

@dataclass
class ShadowedCircuit:
    """A circuit plus the shadow copies of the negated-query ancestor chain.

    Shadow nodes get fresh ids starting at ``len(circuit)``.  ``shadow_of``
    maps each shadowed base id to its shadow id; ``shadow_children`` gives
    each shadow gate's child list, where a child is the shadow copy when
    the base child is itself shadowed and the shared base node otherwise.
    ``stub_ids`` are the shadow copies of the negated-query leaves, pinned
    to 0 during evaluation.
    """

    circuit: Circuit
    shadow_of: dict[int, int]
    shadow_children: dict[int, tuple[int, ...]]
    stub_ids: frozenset[int]
    n_total: int

    @property
    def base_root(self) -> int:
        return self.circuit.root

    @property
    def shadow_root(self) -> int:
        return self.shadow_of.get(self.circuit.root, self.circuit.root)

    def children_of(self, nid: int) -> tuple[int, ...]:
        if nid < len(self.circuit):
            return self.circuit.node(nid).children
        if nid in self.stub_ids:
            return ()
        return self.shadow_children[nid]

    def processing_order(self) -> list[int]:
        """Base nodes in file order, each immediately followed by its shadow."""
        order: list[int] = []
        for nid in range(len(self.circuit)):
            order.append(nid)
            if nid in self.shadow_of:
                order.append(self.shadow_of[nid])
        return order


def shadow_circuit(c: Circuit) -> ShadowedCircuit:
    """Duplicate the negated-query leaves and their ancestor closure.

    Requires a query staged by ``set_condition``.  When the negated query
    has no leaf occurrence the shadow set is empty and the shadow root
    coincides with the base root (the conditional is then trivially 1,
    i.e. the query is implied by the circuit and evidence).
    """
    if c.query_literal is None:
        raise CircuitError("circuit has no staged query; call set_condition first")
    qneg_leaves = c.literal_leaves(-c.query_literal)

    parents: dict[int, set[int]] = {i: set() for i in range(len(c))}
    for n in c.nodes:
        for ch in n.children:
            parents[ch].add(n.id)

    shadowed: set[int] = set()
    stack = list(qneg_leaves)
    while stack:
        nid = stack.pop()
        if nid in shadowed:
            continue
        shadowed.add(nid)
        stack.extend(parents[nid])

    shadow_of: dict[int, int] = {}
    next_id = len(c)
    for nid in sorted(shadowed):
        shadow_of[nid] = next_id
        next_id += 1

    stub_ids = frozenset(shadow_of[l] for l in qneg_leaves)
    shadow_children: dict[int, tuple[int, ...]] = {}
    for nid in sorted(shadowed):
        node = c.node(nid)
        if node.children:
            shadow_children[shadow_of[nid]] = tuple(
                shadow_of.get(ch, ch) for ch in node.children)
    return ShadowedCircuit(c, shadow_of, shadow_children, stub_ids, next_id)


# ---------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------

@dataclass
class QueryResult:
    mean: float
    variance: float
    matched: BetaLabel
    variance_clamped: bool = False
    peak_live_rows: Optional[int] = None


def _leaf_mean(sc: ShadowedCircuit, labels: LabelTable, nid: int) -> float:
    node = sc.circuit.node(nid)
    if node.kind is NodeKind.TRUE:
        return 1.0
    if node.kind is NodeKind.FALSE:
        return 0.0
    if node.lam == 0:
        return 0.0
    return labels.mean_of(node.literal)


def _is_stochastic_leaf(sc: ShadowedCircuit, nid: int) -> bool:
    """True for lambda=1 literal leaves (the only nodes with leaf-level cov)."""
    if nid >= len(sc.circuit):
        return False
    node = sc.circuit.node(nid)
    return node.kind is NodeKind.LITERAL and node.lam == 1


def _gate_weights(kind: NodeKind, child_means: list[float]) -> list[float]:
    """Per-child row weights: 1 for OR, leave-one-out mean products for AND.

    For AND, the leave-one-out product equals E[n]/E[c] whenever E[c] != 0
    and is its algebraic limit otherwise (the zero-mean rule), so no
    division by zero can occur.
    """
    if kind is NodeKind.OR:
        return [1.0] * len(child_means)
    k = len(child_means)
    prefix = [1.0] * (k + 1)
    for i in range(k):
        prefix[i + 1] = prefix[i] * child_means[i]
    suffix = [1.0] * (k + 1)
    for i in range(k - 1, -1, -1):
        suffix[i] = suffix[i + 1] * child_means[i]
    return [prefix[i] * suffix[i + 1] for i in range(k)]


def _conditioned_result(mean_num: float, mean_den: float,
                        var_num: float, var_den: float, cov_nd: float,
                        base_rate: float, prior_weight: float,
                        peak_live_rows: Optional[int]) -> QueryResult:
    if mean_den == 0.0:
        raise InconsistentEvidenceError("inconsistent evidence")
    mean = mean_num / mean_den
    var = (var_num / mean_den ** 2
           + mean_num ** 2 * var_den / mean_den ** 4
           - 2.0 * mean_num * cov_nd / mean_den ** 3)
    bound = max(mean, 0.0) * max(1.0 - mean, 0.0)
    clamped = False
    if var < 0.0:
        # First-order expansion can slip below 0 by approximation error.
        clamped = var < -1e-15
        var = 0.0
    elif var > bound:
        clamped = True
        var = bound
    matched = betacalc.moment_match(Moments(mean, var), base_rate, prior_weight)
    return QueryResult(mean, var, matched, clamped, peak_live_rows)


def _gate_kind(sc: ShadowedCircuit, nid: int,
               base_of: dict[int, int]) -> NodeKind:
    base = nid if nid < len(sc.circuit) else base_of[nid]
    return sc.circuit.node(base).kind


def _variable_groups(sc: ShadowedCircuit, leaf_cov: LeafCovariance) -> dict[int, int]:
    """Union-find over variables linked by cross-covariance entries.

    Two leaves can only be correlated when their variables fall in the same
    group (same variable, complements, or an explicit cross entry).  The
    evaluators initialize all leaves of a group together, which guarantees
    that a gate's frozen zero covariance against any later-initialized leaf
    is in fact the true value.
    """
    parent: dict[int, int] = {}

    def find(v: int) -> int:
        parent.setdefault(v, v)
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for (vi, vj) in leaf_cov.cross_entries:
        ri, rj = find(vi), find(vj)
        if ri != rj:
            parent[ri] = rj
    for node in sc.circuit.nodes:
        if node.kind is NodeKind.LITERAL:
            find(node.var)
    return {v: find(v) for v in list(parent)}


def _schedule(sc: ShadowedCircuit,
              leaf_cov: LeafCovariance) -> list[list[int]]:
    """Deterministic evaluation order shared by both covariance sweeps.

    Children-before-parents batches: a batch is either one gate/stub or a
    whole leaf correlation group (initialized atomically so every frozen
    zero cross-covariance against already-evaluated gates is truly zero).
    Among ready nodes the scheduler greedily picks one whose evaluation
    lets the streaming evaluator free the most covariance rows, breaking
    ties by lowest id.  The choice is purely structural, so the order is
    identical no matter which evaluator consumes it -- which is what makes
    the full-matrix and streaming outputs bitwise equal.
    """
    all_ids = list(range(len(sc.circuit))) + sorted(sc.shadow_of.values())
    pinned = {sc.base_root, sc.shadow_root}

    parents_map: dict[int, list[int]] = {i: [] for i in all_ids}
    remaining_parents = [0] * sc.n_total
    unmet = [0] * sc.n_total
    for nid in all_ids:
        kids = set(sc.children_of(nid))
        unmet[nid] = len(kids)
        for ch in kids:
            remaining_parents[ch] += 1
            parents_map[ch].append(nid)

    groups = _variable_groups(sc, leaf_cov)
    group_leaves: dict[int, list[int]] = {}
    for nid in range(len(sc.circuit)):
        node = sc.circuit.node(nid)
        if node.kind is NodeKind.LITERAL:
            group_leaves.setdefault(groups[node.var], []).append(nid)

    ready = {nid for nid in all_ids if unmet[nid] == 0}
    order: list[list[int]] = []

    def frees(nid: int) -> int:
        return sum(1 for ch in set(sc.children_of(nid))
                   if remaining_parents[ch] == 1 and ch not in pinned)

    def mark_done(nid: int) -> None:
        for parent in parents_map[nid]:
            unmet[parent] -= 1
            if unmet[parent] == 0:
                ready.add(parent)

    while ready:
        nid = max(ready, key=lambda i: (frees(i), -i))
        node = sc.circuit.node(nid) if nid < len(sc.circuit) else None
        if node is not None and node.kind is NodeKind.LITERAL:
            batch = [l for l in group_leaves[groups[node.var]]
                     if l in ready or l == nid]
            for leaf in batch:
                ready.discard(leaf)
            order.append(batch)
            for leaf in batch:
                mark_done(leaf)
        else:
            ready.discard(nid)
            order.append([nid])
            for ch in set(sc.children_of(nid)):
                remaining_parents[ch] -= 1
            mark_done(nid)
    return order


def moment_sweep(sc: ShadowedCircuit, labels: LabelTable,
                 leaf_cov: Optional[LeafCovariance] = None
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Means and full covariance matrix over all base and shadow nodes.

    Row/column i of the covariance matrix belongs to node id i (shadow ids
    start at ``len(sc.circuit)``).  ``leaf_cov`` defaults to independent
    leaves (block-diagonal pattern with cov[v, not v] = -var[v] inside
    each variable's block).
    """
    if leaf_cov is None:
        leaf_cov = LeafCovariance()
    n = sc.n_total
    base_of = {sh: b for b, sh in sc.shadow_of.items()}
    means = np.zeros(n)
    cov = np.zeros((n, n))
    literal_at: dict[int, int] = {}   # stochastic leaf id -> signed literal

    for batch in _schedule(sc, leaf_cov):
        for nid in batch:
            if nid in sc.stub_ids:
                continue  # pinned to mean 0, zero covariance row
            node = sc.circuit.node(nid) if nid < len(sc.circuit) else None
            if node is not None and not node.children:
                means[nid] = _leaf_mean(sc, labels, nid)
                if _is_stochastic_leaf(sc, nid):
                    lit = node.literal
                    row = np.zeros(n)
                    for other, olit in literal_at.items():
                        value = leaf_cov.lookup(labels, lit, olit)
                        row[other] = value
                        cov[other, nid] = value
                    row[nid] = labels.variance_of(lit)
                    cov[nid, :] = row
                    literal_at[nid] = lit
                continue
            children = sc.children_of(nid)
            kind = _gate_kind(sc, nid, base_of)
            child_means = [float(means[c]) for c in children]
            weights = _gate_weights(kind, child_means)
            if kind is NodeKind.OR:
                means[nid] = math.fsum(child_means)
            else:
                m = 1.0
                for cm in child_means:
                    m *= cm
                means[nid] = m
            row = np.zeros(n)
            for c, w in zip(children, weights):
                row += w * cov[c, :]
            diag = math.fsum(w * row[c] for c, w in zip(children, weights))
            cov[nid, :] = row
            cov[:, nid] = row
            cov[nid, nid] = diag

    return means, cov


def eval_cov(sc: ShadowedCircuit, labels: LabelTable,
             leaf_cov: Optional[LeafCovariance] = None,
             base_rate: float = betacalc.DEFAULT_BASE_RATE,
             prior_weight: float = betacalc.DEFAULT_PRIOR_WEIGHT) -> QueryResult:
    """Full-matrix covariance sweep followed by the conditioning division.

    ``leaf_cov`` defaults to independent leaves (block-diagonal pattern
    with cov[v, not v] = -var[v] inside each variable's block).
    """
    means, cov = moment_sweep(sc, labels, leaf_cov)
    num, den = sc.shadow_root, sc.base_root
    return _conditioned_result(
        float(means[num]), float(means[den]),
        float(cov[num, num]), float(cov[den, den]), float(cov[num, den]),
        base_rate, prior_weight, None)


def eval_cov_streaming(sc: ShadowedCircuit, labels: LabelTable,
                       leaf_cov: Optional[LeafCovariance] = None,
                       base_rate: float = betacalc.DEFAULT_BASE_RATE,
                       prior_weight: float = betacalc.DEFAULT_PRIOR_WEIGHT
                       ) -> QueryResult:
    """Streaming variant of ``eval_cov`` with row-level memory management.

    Produces bit-identical numbers: both evaluators walk the shared
    ``_schedule`` order and compute every covariance entry by the same
    expression in the same child fold order; only storage differs.  A
    node's covariance row is freed as soon as its last parent has been
    evaluated (the two conditioning roots stay pinned).  The schedule
    greedily prefers nodes that free the most rows and pulls leaves in
    lazily, one variable correlation group at a time, so chains over
    independent variables keep a depth-independent live set.  The peak
    number of live rows is reported.
    """
    if leaf_cov is None:
        leaf_cov = LeafCovariance()
    n = sc.n_total
    base_of = {sh: b for b, sh in sc.shadow_of.items()}
    pinned = {sc.base_root, sc.shadow_root}

    remaining_parents = [0] * n
    all_ids = list(range(len(sc.circuit))) + sorted(sc.shadow_of.values())
    for nid in all_ids:
        for ch in set(sc.children_of(nid)):
            remaining_parents[ch] += 1

    means = [0.0] * n
    rows: dict[int, np.ndarray] = {}
    literal_at: dict[int, int] = {}
    peak = 0

    def init_leaf(nid: int) -> None:
        means[nid] = _leaf_mean(sc, labels, nid)
        row = np.zeros(n)
        if _is_stochastic_leaf(sc, nid):
            lit = sc.circuit.node(nid).literal
            for other, olit in literal_at.items():
                value = leaf_cov.lookup(labels, lit, olit)
                row[other] = value
                if other in rows:
                    rows[other][nid] = value
            row[nid] = labels.variance_of(lit)
            literal_at[nid] = lit
        rows[nid] = row

    def release_children(nid: int) -> None:
        for ch in set(sc.children_of(nid)):
            remaining_parents[ch] -= 1
            if remaining_parents[ch] == 0 and ch not in pinned and ch in rows:
                del rows[ch]

    for batch in _schedule(sc, leaf_cov):
        for nid in batch:
            if nid in sc.stub_ids:
                means[nid] = 0.0
                rows[nid] = np.zeros(n)
            elif nid < len(sc.circuit) and not sc.circuit.node(nid).children:
                init_leaf(nid)
            else:
                children = sc.children_of(nid)
                kind = _gate_kind(sc, nid, base_of)
                child_means = [means[c] for c in children]
                weights = _gate_weights(kind, child_means)
                if kind is NodeKind.OR:
                    means[nid] = math.fsum(child_means)
                else:
                    m = 1.0
                    for cm in child_means:
                        m *= cm
                    means[nid] = m
                row = np.zeros(n)
                for c, w in zip(children, weights):
                    row += w * rows[c]
                diag = math.fsum(w * row[c] for c, w in zip(children, weights))
                row[nid] = diag
                for live, live_row in rows.items():
                    live_row[nid] = row[live]
                rows[nid] = row
                release_children(nid)
        peak = max(peak, len(rows))

    num, den = sc.shadow_root, sc.base_root
    return _conditioned_result(
        means[num], means[den],
        float(rows[num][num]), float(rows[den][den]), float(rows[num][den]),
        base_rate, prior_weight, peak)
