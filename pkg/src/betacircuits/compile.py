"""Desk-scale propositional theory to d-DNNF compiler, plus BN encoders.

The compiler performs recursive Shannon expansion: pick the next variable
v in the given order that still occurs in the formula, and build

    node = (v AND compile(f|v=1))  OR  (not v AND compile(f|v=0))

with constant folding.  Sub-formulas are canonicalized and memoized, so
structurally equal residual formulas share one circuit node (a hash-consed
DAG, BDD-style).  The output is decomposable by construction (the split
variable never occurs in the branch bodies) and deterministic by
construction (the two branches disagree on the split variable), and always
passes exact circuit validation.

This is an exponential-worst-case desk tool, guarded by a free-variable
limit; it is meant to compile the bundled example models, not to compete
with real knowledge compilers.

Formulas are canonical nested tuples:

    True / False        constants
    ("var", v)          positive atom
    ("not", f)          negation
    ("and", (f, ...))   conjunction, flattened/sorted/deduplicated
    ("or", (f, ...))    disjunction, likewise
    ("iff", a, b)       biconditional, operands ordered

``encode_bn`` propositionalizes a binary Bayesian network in the standard
way: one fresh "CPT variable" per conditional-probability-table row, and
per network node a completion biconditional

    node <-> OR over parent configurations (parent literals AND cpt-var).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .circuit import Circuit, CircuitError, CircuitNode, NodeKind

Formula = Union[bool, tuple]

MAX_COMPILE_VARS = 24


# ---------------------------------------------------------------------
# Canonical formula constructors
# ---------------------------------------------------------------------

def f_var(v: int) -> Formula:
    if v <= 0:
        raise ValueError(f"variable ids must be positive, got {v}")
    return ("var", v)


def f_not(f: Formula) -> Formula:
    if f is True:
        return False
    if f is False:
        return True
    if f[0] == "not":
        return f[1]
    return ("not", f)


def _flatten(tag: str, parts: Iterable[Formula],
             absorbing: bool, neutral: bool) -> Formula:
    """Shared and/or constructor core: flatten, fold constants, dedupe.

    A literal together with its negation collapses to the absorbing
    element (x and not-x for "and", x or not-x for "or").
    """
    items: list[Formula] = []
    seen: set = set()

    def push(p: Formula) -> bool:
        """Add one operand; True means the result is absorbed."""
        if isinstance(p, bool):
            return p is absorbing
        if p[0] == tag:
            return any(push(q) for q in p[1])
        if p not in seen:
            seen.add(p)
            items.append(p)
        return False

    for p in parts:
        if push(p):
            return absorbing
    for q in items:
        if f_not(q) in seen:
            return absorbing
    if not items:
        return neutral
    if len(items) == 1:
        return items[0]
    items.sort(key=repr)
    return (tag, tuple(items))


def f_and(*parts: Formula) -> Formula:
    return _flatten("and", parts, absorbing=False, neutral=True)


def f_or(*parts: Formula) -> Formula:
    return _flatten("or", parts, absorbing=True, neutral=False)


def f_iff(a: Formula, b: Formula) -> Formula:
    if a is True:
        return b
    if a is False:
        return f_not(b)
    if b is True:
        return a
    if b is False:
        return f_not(a)
    if a == b:
        return True
    if a == f_not(b):
        return False
    lo, hi = sorted((a, b), key=repr)
    return ("iff", lo, hi)


def vars_of(f: Formula) -> frozenset[int]:
    if isinstance(f, bool):
        return frozenset()
    tag = f[0]
    if tag == "var":
        return frozenset((f[1],))
    if tag == "not":
        return vars_of(f[1])
    if tag == "iff":
        return vars_of(f[1]) | vars_of(f[2])
    out: set[int] = set()
    for p in f[1]:
        out |= vars_of(p)
    return frozenset(out)


def substitute(f: Formula, var: int, value: bool) -> Formula:
    """Assign one variable and re-canonicalize."""
    if isinstance(f, bool):
        return f
    tag = f[0]
    if tag == "var":
        return value if f[1] == var else f
    if tag == "not":
        return f_not(substitute(f[1], var, value))
    if tag == "iff":
        return f_iff(substitute(f[1], var, value), substitute(f[2], var, value))
    parts = [substitute(p, var, value) for p in f[1]]
    return f_and(*parts) if tag == "and" else f_or(*parts)


def eval_formula(f: Formula, assignment: Mapping[int, bool]) -> bool:
    if isinstance(f, bool):
        return f
    tag = f[0]
    if tag == "var":
        return assignment[f[1]]
    if tag == "not":
        return not eval_formula(f[1], assignment)
    if tag == "iff":
        return eval_formula(f[1], assignment) == eval_formula(f[2], assignment)
    if tag == "and":
        return all(eval_formula(p, assignment) for p in f[1])
    return any(eval_formula(p, assignment) for p in f[1])


# ---------------------------------------------------------------------
# Theories
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class Theory:
    """A conjunction of propositional constraints over vars 1..var_count."""

    var_count: int
    constraints: tuple[Formula, ...]

    def formula(self) -> Formula:
        return f_and(*self.constraints)

    def substitute_evidence(self, assignment: Mapping[int, bool]) -> "Theory":
        """Assign variables into every constraint (used for observed atoms).

        Only sound for deterministic (weight-1) atoms or when the caller
        accounts for the dropped leaf factors separately: the substituted
        variable disappears from the compiled circuit entirely.
        """
        constraints = []
        for c in self.constraints:
            for v, val in assignment.items():
                c = substitute(c, v, val)
            constraints.append(c)
        return Theory(self.var_count, tuple(constraints))


# ---------------------------------------------------------------------
# Shannon compilation
# ---------------------------------------------------------------------

class _Builder:
    """Hash-consing circuit builder."""

    def __init__(self, var_count: int):
        self.var_count = var_count
        self.nodes: list[CircuitNode] = []
        self._lit: dict[int, int] = {}
        self._gate: dict[tuple, int] = {}
        self._true: Optional[int] = None
        self._false: Optional[int] = None

    def _add(self, kind: NodeKind, children: tuple[int, ...] = (),
             literal: int = 0, decision_var: int = 0) -> int:
        nid = len(self.nodes)
        self.nodes.append(CircuitNode(nid, kind, children, literal,
                                      decision_var=decision_var))
        return nid

    def true(self) -> int:
        if self._true is None:
            self._true = self._add(NodeKind.TRUE)
        return self._true

    def false(self) -> int:
        if self._false is None:
            self._false = self._add(NodeKind.FALSE)
        return self._false

    def literal(self, lit: int) -> int:
        if lit not in self._lit:
            self._lit[lit] = self._add(NodeKind.LITERAL, literal=lit)
        return self._lit[lit]

    def gate(self, kind: NodeKind, children: tuple[int, ...],
             decision_var: int = 0) -> int:
        key = (kind, children)
        if key not in self._gate:
            self._gate[key] = self._add(kind, children,
                                        decision_var=decision_var)
        return self._gate[key]

    def finish(self, root: int) -> Circuit:
        if root != len(self.nodes) - 1:
            # NNF text convention: last node is the root.
            root = self._add(NodeKind.AND, (root,))
        return Circuit(self.nodes, root, self.var_count)


def shannon_compile(theory: Theory,
                    order: Optional[Sequence[int]] = None,
                    memoize: bool = True) -> Circuit:
    """Compile a theory into a deterministic decomposable circuit.

    ``order`` lists variable ids; splitting always picks the earliest
    variable of the order still free in the residual formula (default:
    ascending id).  An unsatisfiable theory compiles to a FALSE-rooted
    circuit.  Raises CircuitError when the formula has more than
    MAX_COMPILE_VARS free variables.
    """
    formula = theory.formula()
    free = vars_of(formula)
    if len(free) > MAX_COMPILE_VARS:
        raise CircuitError(
            f"{len(free)} free variables exceed the compile limit "
            f"of {MAX_COMPILE_VARS}")
    if order is None:
        order = sorted(free)
    position = {v: i for i, v in enumerate(order)}
    missing = free - position.keys()
    if missing:
        raise CircuitError(f"order is missing variables {sorted(missing)}")

    builder = _Builder(theory.var_count)
    memo: dict[Formula, int] = {}

    def compile_rec(f: Formula) -> int:
        if f is True:
            return builder.true()
        if f is False:
            return builder.false()
        if memoize and f in memo:
            return memo[f]
        v = min(vars_of(f), key=position.__getitem__)
        branches = []
        for value, lit in ((True, v), (False, -v)):
            sub = compile_rec(substitute(f, v, value))
            node = builder.nodes[sub]
            if node.kind is NodeKind.FALSE:
                continue
            if node.kind is NodeKind.TRUE:
                branches.append(builder.literal(lit))
            else:
                branches.append(
                    builder.gate(NodeKind.AND, (builder.literal(lit), sub)))
        if not branches:
            result = builder.false()
        elif len(branches) == 1:
            result = branches[0]
        else:
            result = builder.gate(NodeKind.OR, tuple(branches), decision_var=v)
        if memoize:
            memo[f] = result
        return result

    return builder.finish(compile_rec(formula))


# ---------------------------------------------------------------------
# Bayesian network encoding
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class BNNode:
    name: str
    parents: tuple[str, ...] = ()


@dataclass(frozen=True)
class BayesNetSpec:
    """A binary Bayesian network given as named nodes with parent lists."""

    nodes: tuple[BNNode, ...]

    def __post_init__(self) -> None:
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate node names")
        known: set[str] = set()
        for n in self.nodes:
            for p in n.parents:
                if p not in known:
                    raise ValueError(
                        f"node {n.name}: parent {p} not declared earlier "
                        f"(cyclic or out-of-order specification)")
            known.add(n.name)


@dataclass
class BNLegend:
    """Variable bookkeeping for an encoded network.

    ``node_var`` maps node names to circuit variables; ``cpt_var`` maps
    (node name, parent truth configuration) to the fresh annotated
    variable of that CPT row.  Parent configurations are tuples of booleans
    in the node's declared parent order.
    """

    node_var: dict[str, int] = field(default_factory=dict)
    cpt_var: dict[tuple[str, tuple[bool, ...]], int] = field(default_factory=dict)

    @property
    def cpt_vars(self) -> list[int]:
        return sorted(self.cpt_var.values())


def encode_bn(spec: BayesNetSpec) -> tuple[Theory, BNLegend]:
    """Propositionalize a binary BN with one variable per CPT row.

    Variable layout: node variables first (declaration order), then CPT
    variables grouped by node in declaration order, rows in binary order
    of the parent configuration.
    """
    legend = BNLegend()
    next_var = 1
    for n in spec.nodes:
        legend.node_var[n.name] = next_var
        next_var += 1
    for n in spec.nodes:
        k = len(n.parents)
        for bits in range(1 << k):
            config = tuple(bool((bits >> i) & 1) for i in range(k))
            legend.cpt_var[(n.name, config)] = next_var
            next_var += 1

    constraints = []
    for n in spec.nodes:
        k = len(n.parents)
        terms = []
        for bits in range(1 << k):
            config = tuple(bool((bits >> i) & 1) for i in range(k))
            lits = [f_var(legend.node_var[p]) if val
                    else f_not(f_var(legend.node_var[p]))
                    for p, val in zip(n.parents, config)]
            terms.append(f_and(*lits, f_var(legend.cpt_var[(n.name, config)])))
        constraints.append(f_iff(f_var(legend.node_var[n.name]), f_or(*terms)))
    return Theory(next_var - 1, tuple(constraints)), legend


def bn_compile_order(spec: BayesNetSpec, legend: BNLegend) -> list[int]:
    """Interleaved split order: each node's CPT variables, then the node.

    Families follow the declaration (topological) order, which keeps the
    residual formulas small during Shannon expansion -- a node's
    biconditional resolves as soon as its parents and CPT rows are split.
    """
    order: list[int] = []
    for n in spec.nodes:
        k = len(n.parents)
        for bits in range(1 << k):
            config = tuple(bool((bits >> i) & 1) for i in range(k))
            order.append(legend.cpt_var[(n.name, config)])
        order.append(legend.node_var[n.name])
    return order
