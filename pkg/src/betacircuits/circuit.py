"""d-DNNF circuit representation, NNF file I/O, validation, and evaluation.

A circuit is a rooted DAG whose internal nodes are AND/OR gates and whose
leaves are literals or the constants TRUE/FALSE.  The circuits handled here
are *deterministic* and *decomposable*:

* decomposable AND: the children of an AND gate share no variables;
* deterministic OR: the children of an OR gate are pairwise logically
  contradictory.

Under these restrictions a single bottom-up sweep computes weighted model
counts in any commutative semiring: OR folds with the semiring sum, AND
with the semiring product, and a literal leaf contributes its label.

Each leaf additionally carries a lambda indicator bit.  Setting lambda = 0
on a leaf makes it contribute the additive identity, which removes every
model containing that literal from the count -- this is how evidence and
query conditioning are pushed into the circuit without rebuilding it.

File format (c2d-style NNF text):

    nnf <node-count> <edge-count> <var-count>
    L <lit>                    literal leaf
    A <k> <id...>              AND gate with k children ("A 0" is TRUE)
    O <decision-var> <k> <id...>   OR gate ("O 0 0" is FALSE)

Children are listed by node id and must precede their parents; the last
node is the root.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .betacalc import BetaLabel


class NodeKind(enum.Enum):
    AND = "A"
    OR = "O"
    LITERAL = "L"
    TRUE = "T"
    FALSE = "F"


@dataclass(frozen=True)
class CircuitNode:
    id: int
    kind: NodeKind
    children: tuple[int, ...] = ()
    literal: int = 0          # signed variable id, LITERAL nodes only
    lam: int = 1              # lambda indicator (leaves; 0 = conditioned out)
    decision_var: int = 0     # OR decision variable from the file (informational)

    @property
    def var(self) -> int:
        return abs(self.literal)


class CircuitError(ValueError):
    """Structural or parse error in a circuit."""


@dataclass
class Circuit:
    """An immutable-by-convention d-DNNF circuit.

    ``query_literal`` and ``evidence`` are bookkeeping set by
    ``set_condition``: the evidence is already reflected in the leaves'
    lambda bits, the query literal is staged for the shadowing step of the
    covariance evaluator.
    """

    nodes: list[CircuitNode]
    root: int
    var_count: int
    query_literal: Optional[int] = None
    evidence: tuple[tuple[int, bool], ...] = ()
    _scopes: Optional[list[frozenset[int]]] = field(
        default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, nid: int) -> CircuitNode:
        return self.nodes[nid]

    def scopes(self) -> list[frozenset[int]]:
        """Per-node variable scopes (cached)."""
        if self._scopes is None:
            out: list[frozenset[int]] = []
            for n in self.nodes:
                if n.kind is NodeKind.LITERAL:
                    out.append(frozenset((n.var,)))
                elif n.kind in (NodeKind.TRUE, NodeKind.FALSE):
                    out.append(frozenset())
                else:
                    acc: set[int] = set()
                    for c in n.children:
                        acc |= out[c]
                    out.append(frozenset(acc))
            self._scopes = out
        return self._scopes

    def parent_counts(self) -> list[int]:
        counts = [0] * len(self.nodes)
        for n in self.nodes:
            for c in n.children:
                counts[c] += 1
        return counts

    def literal_leaves(self, literal: int) -> list[int]:
        """Ids of all leaves carrying exactly this signed literal."""
        return [n.id for n in self.nodes
                if n.kind is NodeKind.LITERAL and n.literal == literal]

    def variables(self) -> frozenset[int]:
        return self.scopes()[self.root]


# ---------------------------------------------------------------------
# Parsing and formatting
# ---------------------------------------------------------------------

def parse_nnf(text: str) -> Circuit:
    """Parse c2d-style NNF text into a Circuit.

    Raises CircuitError with a line number for malformed headers, dangling
    child references, and out-of-range literals.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    content = [(i + 1, ln) for i, ln in enumerate(lines)
               if ln and not ln.startswith("c")]
    if not content:
        raise CircuitError("empty NNF input")
    lineno, header = content[0]
    parts = header.split()
    if len(parts) != 4 or parts[0] != "nnf":
        raise CircuitError(f"line {lineno}: malformed header {header!r}")
    try:
        n_nodes, _n_edges, n_vars = int(parts[1]), int(parts[2]), int(parts[3])
    except ValueError as exc:
        raise CircuitError(f"line {lineno}: non-integer header field") from exc

    nodes: list[CircuitNode] = []
    for lineno, ln in content[1:]:
        toks = ln.split()
        nid = len(nodes)
        tag = toks[0]
        try:
            if tag == "L":
                if len(toks) != 2:
                    raise CircuitError(f"line {lineno}: malformed literal line")
                lit = int(toks[1])
                if lit == 0 or abs(lit) > n_vars:
                    raise CircuitError(
                        f"line {lineno}: literal {lit} out of range 1..{n_vars}")
                nodes.append(CircuitNode(nid, NodeKind.LITERAL, literal=lit))
            elif tag == "A":
                k = int(toks[1])
                ids = tuple(int(t) for t in toks[2:])
                if len(ids) != k:
                    raise CircuitError(
                        f"line {lineno}: AND arity {k} but {len(ids)} children")
                if k == 0:
                    nodes.append(CircuitNode(nid, NodeKind.TRUE))
                else:
                    _check_children(ids, nid, lineno)
                    nodes.append(CircuitNode(nid, NodeKind.AND, ids))
            elif tag == "O":
                dvar = int(toks[1])
                k = int(toks[2])
                ids = tuple(int(t) for t in toks[3:])
                if len(ids) != k:
                    raise CircuitError(
                        f"line {lineno}: OR arity {k} but {len(ids)} children")
                if k == 0:
                    nodes.append(CircuitNode(nid, NodeKind.FALSE))
                else:
                    _check_children(ids, nid, lineno)
                    nodes.append(CircuitNode(nid, NodeKind.OR, ids,
                                             decision_var=dvar))
            else:
                raise CircuitError(f"line {lineno}: unknown node tag {tag!r}")
        except (ValueError, IndexError) as exc:
            if isinstance(exc, CircuitError):
                raise
            raise CircuitError(f"line {lineno}: malformed node line {ln!r}") from exc
    if len(nodes) != n_nodes:
        raise CircuitError(
            f"header declares {n_nodes} nodes but file contains {len(nodes)}")
    if not nodes:
        raise CircuitError("circuit has no nodes")
    return Circuit(nodes, root=len(nodes) - 1, var_count=n_vars)


def _check_children(ids: Sequence[int], nid: int, lineno: int) -> None:
    for c in ids:
        if c < 0 or c >= nid:
            raise CircuitError(
                f"line {lineno}: child id {c} does not precede node {nid}")


def format_nnf(c: Circuit) -> str:
    """Serialize a circuit back to NNF text (round-trips with parse_nnf)."""
    edges = sum(len(n.children) for n in c.nodes)
    out = [f"nnf {len(c.nodes)} {edges} {c.var_count}"]
    for n in c.nodes:
        if n.kind is NodeKind.LITERAL:
            out.append(f"L {n.literal}")
        elif n.kind is NodeKind.TRUE:
            out.append("A 0")
        elif n.kind is NodeKind.FALSE:
            out.append("O 0 0")
        elif n.kind is NodeKind.AND:
            out.append("A " + " ".join(str(i) for i in (len(n.children),) + n.children))
        else:
            out.append("O " + " ".join(
                str(i) for i in (n.decision_var, len(n.children)) + n.children))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list[str]
    warnings: list[str]
    determinism_exact: bool

    @property
    def ok(self) -> bool:
        return not self.violations


def truth_value(c: Circuit, assignment: Mapping[int, bool],
                respect_lambda: bool = False) -> bool:
    """Boolean value of the circuit under a (partial) variable assignment.

    Variables missing from the assignment make literal leaves raise KeyError;
    callers must cover the scope of the evaluated circuit.  With
    ``respect_lambda`` leaves with lambda = 0 evaluate to False.
    """
    memo: dict[int, bool] = {}
    for n in c.nodes:
        if n.kind is NodeKind.LITERAL:
            if respect_lambda and n.lam == 0:
                memo[n.id] = False
            else:
                val = assignment[n.var]
                memo[n.id] = val if n.literal > 0 else not val
        elif n.kind is NodeKind.TRUE:
            memo[n.id] = True
        elif n.kind is NodeKind.FALSE:
            memo[n.id] = False
        elif n.kind is NodeKind.AND:
            memo[n.id] = all(memo[ch] for ch in n.children)
        else:
            memo[n.id] = any(memo[ch] for ch in n.children)
    return memo[c.root]


def validate(c: Circuit, max_check_vars: int = 16) -> ValidationReport:
    """Check decomposability (always exact) and determinism.

    Determinism requires exhaustive model enumeration, which is exponential
    in the number of variables; it is checked exactly iff
    ``c.var_count <= max_check_vars``, otherwise the circuit is trusted and
    a warning is recorded.
    """
    violations: list[str] = []
    warnings: list[str] = []
    scopes = c.scopes()

    for n in c.nodes:
        if n.kind is NodeKind.AND:
            seen: set[int] = set()
            for ch in n.children:
                overlap = seen & scopes[ch]
                if overlap:
                    violations.append(
                        f"node {n.id}: AND children share variables {sorted(overlap)}")
                seen |= scopes[ch]

    determinism_exact = c.var_count <= max_check_vars
    if not determinism_exact:
        warnings.append(
            f"determinism not checked: {c.var_count} variables exceeds "
            f"max_check_vars={max_check_vars}; circuit trusted")
    else:
        for n in c.nodes:
            if n.kind is not NodeKind.OR or len(n.children) < 2:
                continue
            local_vars = sorted(scopes[n.id])
            for bits in range(1 << len(local_vars)):
                assignment = {v: bool((bits >> i) & 1)
                              for i, v in enumerate(local_vars)}
                sat = [ch for ch in n.children
                       if _truth_of_subtree(c, ch, assignment)]
                if len(sat) > 1:
                    violations.append(
                        f"node {n.id}: OR children {sat} overlap on "
                        f"assignment {assignment}")
                    break
    return ValidationReport(violations, warnings, determinism_exact)


def _truth_of_subtree(c: Circuit, nid: int, assignment: Mapping[int, bool]) -> bool:
    n = c.nodes[nid]
    if n.kind is NodeKind.LITERAL:
        val = assignment[n.var]
        return val if n.literal > 0 else not val
    if n.kind is NodeKind.TRUE:
        return True
    if n.kind is NodeKind.FALSE:
        return False
    if n.kind is NodeKind.AND:
        return all(_truth_of_subtree(c, ch, assignment) for ch in n.children)
    return any(_truth_of_subtree(c, ch, assignment) for ch in n.children)


# ---------------------------------------------------------------------
# Conditioning
# ---------------------------------------------------------------------

def set_condition(c: Circuit, query: Optional[int],
                  evidence: Iterable[tuple[int, bool]] = ()) -> Circuit:
    """Return a copy conditioned on evidence with a staged query literal.

    Evidence (var, value) pairs set lambda = 0 on every leaf asserting the
    *contradicting* polarity of that variable.  The query literal is only
    recorded: the covariance evaluator shadows its negation's leaves, and
    the semiring evaluators toggle them per pass.

    Raises CircuitError when the query variable does not occur in the
    circuit.
    """
    ev = tuple(evidence)
    contradicted = {(-v if val else v) for v, val in ev}
    if query is not None:
        qvar = abs(query)
        if not any(n.kind is NodeKind.LITERAL and n.var == qvar for n in c.nodes):
            raise CircuitError(f"query variable {qvar} does not occur in circuit")
    new_nodes = []
    for n in c.nodes:
        if n.kind is NodeKind.LITERAL and n.literal in contradicted:
            new_nodes.append(replace(n, lam=0))
        else:
            new_nodes.append(n)
    return Circuit(new_nodes, c.root, c.var_count,
                   query_literal=query, evidence=ev)


# ---------------------------------------------------------------------
# Label tables
# ---------------------------------------------------------------------

class LabelTable:
    """The labelling function: variable id -> BetaLabel, complement-closed.

    A negative literal is labelled with the complement of its variable's
    label, so complement means always sum to 1.  Variables *absent* from
    the table are deterministic (derived) atoms: both their polarities are
    labelled certain-true, i.e. weight 1, which is the standard weighted
    model counting treatment for non-probabilistic variables.
    """

    def __init__(self, labels: Optional[Mapping[int, BetaLabel]] = None):
        self._labels: dict[int, BetaLabel] = dict(labels or {})
        for v in self._labels:
            if v <= 0:
                raise ValueError(f"variable ids must be positive, got {v}")

    def __contains__(self, var: int) -> bool:
        return var in self._labels

    def __len__(self) -> int:
        return len(self._labels)

    @property
    def variables(self) -> list[int]:
        return sorted(self._labels)

    def set(self, var: int, label: BetaLabel) -> None:
        self._labels[var] = label

    def label_of(self, literal: int) -> BetaLabel:
        var = abs(literal)
        lab = self._labels.get(var)
        if lab is None:
            return BetaLabel.certain_true()
        return lab if literal > 0 else lab.complement()

    def mean_of(self, literal: int) -> float:
        return self.label_of(literal).mean

    def variance_of(self, literal: int) -> float:
        return self.label_of(literal).variance


def parse_label_table(text: str) -> LabelTable:
    """Parse a label table file.

    One line per variable: ``var alpha_pos alpha_neg base_rate prior_weight``
    (the last two fields optional, defaulting to 0.5 and 2).  The token
    ``inf`` for alpha_pos (alpha_neg) denotes the certain-true
    (certain-false) sentinel.
    """
    table = LabelTable()
    for i, raw in enumerate(text.splitlines(), start=1):
        ln = raw.strip()
        if not ln or ln.startswith("#"):
            continue
        toks = ln.split()
        if len(toks) < 3:
            raise CircuitError(f"label table line {i}: expected at least 3 fields")
        try:
            var = int(toks[0])
            base = float(toks[3]) if len(toks) > 3 else 0.5
            weight = float(toks[4]) if len(toks) > 4 else 2.0
            ap, an = toks[1], toks[2]
            if ap == "inf":
                label = BetaLabel.certain_true(base, weight)
            elif an == "inf":
                label = BetaLabel.certain_false(base, weight)
            else:
                label = BetaLabel(float(ap), float(an), base, weight)
        except ValueError as exc:
            raise CircuitError(f"label table line {i}: {exc}") from exc
        table.set(var, label)
    return table


def format_label_table(table: LabelTable) -> str:
    out = []
    for v in table.variables:
        lab = table.label_of(v)
        if lab.certain is True:
            ap, an = "inf", "1"
        elif lab.certain is False:
            ap, an = "1", "inf"
        else:
            ap, an = repr(lab.alpha_pos), repr(lab.alpha_neg)
        out.append(f"{v} {ap} {an} {lab.base_rate!r} {lab.prior_weight!r}")
    return "\n".join(out) + "\n"


def parse_condition_file(text: str) -> tuple[Optional[int], list[tuple[int, bool]]]:
    """Parse an evidence/query file.

    Lines are ``evidence <var> <0|1>`` or ``query <var>``; at most one
    query line is allowed.
    """
    query: Optional[int] = None
    evidence: list[tuple[int, bool]] = []
    for i, raw in enumerate(text.splitlines(), start=1):
        ln = raw.strip()
        if not ln or ln.startswith("#"):
            continue
        toks = ln.split()
        if toks[0] == "evidence" and len(toks) == 3:
            evidence.append((int(toks[1]), toks[2] == "1"))
        elif toks[0] == "query" and len(toks) == 2:
            if query is not None:
                raise CircuitError(f"condition file line {i}: second query line")
            query = int(toks[1])
        else:
            raise CircuitError(f"condition file line {i}: malformed line {ln!r}")
    return query, evidence


# ---------------------------------------------------------------------
# Generic semiring evaluation
# ---------------------------------------------------------------------

def eval_circuit(c: Circuit, zero, one, plus: Callable, times: Callable,
                 leaf_value: Callable[[int], object],
                 zero_literals: frozenset[int] = frozenset(),
                 counter: Optional[list[int]] = None):
    """Single bottom-up semiring sweep over the circuit.

    ``leaf_value(lit)`` supplies the label of a literal leaf; leaves with
    lambda = 0 or whose literal is in ``zero_literals`` contribute ``zero``
    instead.  Every node is evaluated exactly once (the node list is a
    topological order); ``counter``, if given, accumulates the number of
    node evaluations for instrumentation.

    Fold order over children is file order, which matters for the
    order-dependent opinion calculus.
    """
    values = [None] * len(c.nodes)
    for n in c.nodes:
        if counter is not None:
            counter[0] += 1
        if n.kind is NodeKind.LITERAL:
            if n.lam == 0 or n.literal in zero_literals:
                values[n.id] = zero
            else:
                values[n.id] = leaf_value(n.literal)
        elif n.kind is NodeKind.TRUE:
            values[n.id] = one
        elif n.kind is NodeKind.FALSE:
            values[n.id] = zero
        elif n.kind is NodeKind.AND:
            acc = values[n.children[0]]
            for ch in n.children[1:]:
                acc = times(acc, values[ch])
            values[n.id] = acc
        else:
            acc = values[n.children[0]]
            for ch in n.children[1:]:
                acc = plus(acc, values[ch])
            values[n.id] = acc
    return values[c.root]
