"""Formula representation, substitution, finite-domain grounding, clause form.

Everything here is immutable and every operation is a pure function, so
formulas and clause sets can be shared between concurrent evaluations
without coordination.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Protocol, Sequence

AGENT = "agent"
OBJECT = "object"

#: Reserved predicate marking hypothetical universal adoption of a plan.
#: The leading "@" keeps it out of the namespace of declared predicates.
UNIVERSALIZATION_PREDICATE = "@universally_adopted"


class LogicError(Exception):
    """A structurally invalid formula operation."""


class GroundingError(LogicError):
    """A formula cannot be grounded over the given domains."""


@dataclass(frozen=True)
class AgentId:
    """Symbolic agent identifier. Declaration order gives the total order."""

    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise LogicError("agent name must be a nonempty token")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Term:
    """An agent or object, either a constant or a variable."""

    sort: str  # AGENT or OBJECT
    name: str
    is_var: bool = False

    def __post_init__(self) -> None:
        if self.sort not in (AGENT, OBJECT):
            raise LogicError(f"unknown term sort {self.sort!r}")
        if not self.name:
            raise LogicError("term name must be a nonempty token")

    def __str__(self) -> str:
        return self.name


def agent_const(name: str) -> Term:
    return Term(AGENT, name)


def agent_var(name: str) -> Term:
    return Term(AGENT, name, is_var=True)


def object_const(name: str) -> Term:
    return Term(OBJECT, name)


def object_var(name: str) -> Term:
    return Term(OBJECT, name, is_var=True)


@dataclass(frozen=True)
class Atom:
    """A predicate applied to terms. Ground when all args are constants."""

    predicate: str
    args: tuple[Term, ...] = ()

    def is_ground(self) -> bool:
        return all(not t.is_var for t in self.args)

    def __str__(self) -> str:
        name = self.predicate.lstrip("@")
        if not self.args:
            return name
        return f"{name}({', '.join(str(t) for t in self.args)})"


@dataclass(frozen=True)
class SignedAtom:
    """An atom or its negation; the building block of plan reasons/actions."""

    atom: Atom
    negated: bool = False

    def as_formula(self) -> "Formula":
        f: Formula = AtomF(self.atom)
        return Not(f) if self.negated else f

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negated else str(self.atom)


# --------------------------------------------------------------------------
# Formula nodes


class Formula:
    """Base class for formula nodes. Subclasses are frozen dataclasses."""

    __slots__ = ()


@dataclass(frozen=True)
class AtomF(Formula):
    atom: Atom


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    antecedent: Formula
    consequent: Formula


@dataclass(frozen=True)
class ForAll(Formula):
    """Universal quantification of an agent or object variable."""

    var: Term
    body: Formula

    def __post_init__(self) -> None:
        if not self.var.is_var:
            raise LogicError(f"forall binds a variable, got constant {self.var}")


@dataclass(frozen=True)
class Possible(Formula):
    """Physical possibility of the body."""

    body: Formula


@dataclass(frozen=True)
class Believable(Formula):
    """The agent can rationally believe the body."""

    agent: str
    body: Formula


@dataclass(frozen=True)
class Required(Formula):
    """Rationality requires the agent to accept the body."""

    agent: str
    body: Formula


@dataclass(frozen=True)
class UniversalizedPlan(Formula):
    """Hypothetical adoption of a declared plan by every agent."""

    plan_id: str


#: The neutral true formula (empty conjunction).
TRUE: Formula = And(())

_MODAL_NODES = (Possible, Believable, Required)


def conj(parts: Sequence[Formula]) -> Formula:
    """Conjunction helper: () -> TRUE, a single part passes through."""
    parts = tuple(parts)
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(parts: Sequence[Formula]) -> Formula:
    parts = tuple(parts)
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


def universalization_trigger(plan_id: str) -> Atom:
    """The ground trigger atom asserted when a plan is universalized."""
    return Atom(UNIVERSALIZATION_PREDICATE, (object_const(plan_id),))


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Not):
        return (f.body,)
    if isinstance(f, (And, Or)):
        return f.parts
    if isinstance(f, Implies):
        return (f.antecedent, f.consequent)
    if isinstance(f, (ForAll, Possible)):
        return (f.body,)
    if isinstance(f, (Believable, Required)):
        return (f.body,)
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal in syntactic order."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def atoms_of(f: Formula) -> Iterator[Atom]:
    for node in walk(f):
        if isinstance(node, AtomF):
            yield node.atom


def is_modal_free(f: Formula) -> bool:
    return not any(isinstance(n, _MODAL_NODES) for n in walk(f))


def validate_modalities(f: Formula) -> None:
    """Reject nested modal operators and misplaced universalized-plan nodes.

    The supported shapes are a belief/requirement modality over an optional
    possibility operator over a modal-free body, or a bare possibility
    operator; universal-adoption nodes make sense only under a possibility
    operator.
    """

    def go(node: Formula, state: int, under_possible: bool) -> None:
        # state 0: outside modalities, 1: under belief/requirement, 2: under possibility
        if isinstance(node, (Believable, Required)):
            if state != 0:
                raise LogicError("nested modal operators are not supported")
            go(node.body, 1, False)
            return
        if isinstance(node, Possible):
            if state == 2:
                raise LogicError("nested modal operators are not supported")
            go(node.body, 2, True)
            return
        if isinstance(node, UniversalizedPlan) and not under_possible:
            raise LogicError(
                "universalized-plan nodes may appear only under a possibility operator"
            )
        for c in children(node):
            go(c, state, under_possible)

    go(f, 0, False)


# --------------------------------------------------------------------------
# Substitution and free variables


def substitute_term(term: Term, binding: Mapping[Term, Term]) -> Term:
    if term.is_var and term in binding:
        replacement = binding[term]
        if replacement.is_var:
            raise LogicError(f"substitution target for {term} must be a constant")
        if replacement.sort != term.sort:
            raise LogicError(
                f"cannot bind {term.sort} variable {term.name} "
                f"to {replacement.sort} constant {replacement.name}"
            )
        return replacement
    return term


def substitute_atom(atom: Atom, binding: Mapping[Term, Term]) -> Atom:
    if not binding or not atom.args:
        return atom
    return Atom(atom.predicate, tuple(substitute_term(t, binding) for t in atom.args))


def substitute_signed(sa: SignedAtom, binding: Mapping[Term, Term]) -> SignedAtom:
    return SignedAtom(substitute_atom(sa.atom, binding), sa.negated)


def substitute(f: Formula, binding: Mapping[Term, Term]) -> Formula:
    """Replace free variables by constants; bound occurrences are untouched."""
    if not binding:
        return f
    if isinstance(f, AtomF):
        return AtomF(substitute_atom(f.atom, binding))
    if isinstance(f, Not):
        return Not(substitute(f.body, binding))
    if isinstance(f, And):
        return And(tuple(substitute(p, binding) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, binding) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(substitute(f.antecedent, binding), substitute(f.consequent, binding))
    if isinstance(f, ForAll):
        inner = {v: c for v, c in binding.items() if v != f.var}
        return ForAll(f.var, substitute(f.body, inner)) if inner else f
    if isinstance(f, Possible):
        return Possible(substitute(f.body, binding))
    if isinstance(f, Believable):
        return Believable(f.agent, substitute(f.body, binding))
    if isinstance(f, Required):
        return Required(f.agent, substitute(f.body, binding))
    if isinstance(f, UniversalizedPlan):
        return f
    raise LogicError(f"unknown formula node {type(f).__name__}")


def free_vars(f: Formula) -> frozenset[Term]:
    """Variables occurring outside any binding quantifier."""

    def go(node: Formula, bound: frozenset[Term]) -> frozenset[Term]:
        if isinstance(node, AtomF):
            return frozenset(t for t in node.atom.args if t.is_var and t not in bound)
        if isinstance(node, ForAll):
            return go(node.body, bound | {node.var})
        out: frozenset[Term] = frozenset()
        for c in children(node):
            out |= go(c, bound)
        return out

    return go(f, frozenset())


# --------------------------------------------------------------------------
# Grounding


class PlanLike(Protocol):
    """What the grounder needs to know about a declared plan."""

    id: str
    agent: AgentId
    reasons: tuple[SignedAtom, ...]
    action: SignedAtom
    object_vars: tuple[Term, ...]

    @property
    def agent_placeholder(self) -> Term: ...


def _plan_instance(plan: PlanLike, binding: Mapping[Term, Term]) -> Formula:
    reasons = conj(tuple(substitute_signed(r, binding).as_formula() for r in plan.reasons))
    action = substitute_signed(plan.action, binding).as_formula()
    return Implies(reasons, action)


def expand_universalized_plan(
    plan: PlanLike,
    agents: Sequence[AgentId],
    objects: Sequence[str],
) -> Formula:
    """Material-conditional reading of everyone adopting the plan.

    One conditional per agent (and per combination of the plan's free object
    variables), conjoined with the plan's trigger atom, which switches on the
    scenario's universalization effects in the same satisfiability check.
    """
    if not agents:
        raise GroundingError("empty agent domain")
    if plan.object_vars and not objects:
        raise GroundingError(
            f"plan {plan.id} has free object variables but no object constants are declared"
        )
    conditionals: list[Formula] = []
    for ag in agents:
        base = {plan.agent_placeholder: agent_const(ag.name)}
        if plan.object_vars:
            for combo in itertools.product(objects, repeat=len(plan.object_vars)):
                binding = dict(base)
                binding.update(
                    {v: object_const(o) for v, o in zip(plan.object_vars, combo)}
                )
                conditionals.append(_plan_instance(plan, binding))
        else:
            conditionals.append(_plan_instance(plan, base))
    conditionals.append(AtomF(universalization_trigger(plan.id)))
    return And(tuple(conditionals))


def ground(
    f: Formula,
    agents: Sequence[AgentId],
    objects: Sequence[str] = (),
    plans: Mapping[str, PlanLike] | None = None,
) -> Formula:
    """Expand quantifiers and universalized-plan nodes over finite domains.

    Free variables are universally closed over their sort's domain first
    (in first-occurrence order), so the result never has free variables.
    Deterministic: identical inputs, including domain order, give
    structurally identical output.
    """
    if not agents:
        raise GroundingError("empty agent domain")

    closed = f
    for var in _ordered_free_vars(f):
        closed = ForAll(var, closed)

    agent_terms = tuple(agent_const(a.name) for a in agents)
    object_terms = tuple(object_const(o) for o in objects)

    def go(node: Formula) -> Formula:
        if isinstance(node, AtomF):
            return node
        if isinstance(node, Not):
            return Not(go(node.body))
        if isinstance(node, And):
            return And(tuple(go(p) for p in node.parts))
        if isinstance(node, Or):
            return Or(tuple(go(p) for p in node.parts))
        if isinstance(node, Implies):
            return Implies(go(node.antecedent), go(node.consequent))
        if isinstance(node, ForAll):
            domain = agent_terms if node.var.sort == AGENT else object_terms
            if not domain:
                raise GroundingError(
                    f"empty {node.var.sort} domain for quantified variable {node.var.name}"
                )
            return conj(tuple(go(substitute(node.body, {node.var: c})) for c in domain))
        if isinstance(node, Possible):
            return Possible(go(node.body))
        if isinstance(node, Believable):
            return Believable(node.agent, go(node.body))
        if isinstance(node, Required):
            return Required(node.agent, go(node.body))
        if isinstance(node, UniversalizedPlan):
            if plans is None or node.plan_id not in plans:
                raise GroundingError(f"no plan named {node.plan_id!r} to expand")
            return expand_universalized_plan(plans[node.plan_id], agents, objects)
        raise LogicError(f"unknown formula node {type(node).__name__}")

    return go(closed)


def _ordered_free_vars(f: Formula) -> list[Term]:
    free = free_vars(f)
    seen: list[Term] = []

    def go(node: Formula, bound: frozenset[Term]) -> None:
        if isinstance(node, AtomF):
            for t in node.atom.args:
                if t.is_var and t in free and t not in bound and t not in seen:
                    seen.append(t)
            return
        if isinstance(node, ForAll):
            go(node.body, bound | {node.var})
            return
        for c in children(node):
            go(c, bound)

    go(f, frozenset())
    return seen


# --------------------------------------------------------------------------
# Ground truth evaluation (testing oracle for the clause conversion)


def evaluate_formula(f: Formula, assignment: Mapping[Atom, bool]) -> bool:
    """Truth value of a ground, modal-free formula under a total assignment."""
    if isinstance(f, AtomF):
        if f.atom not in assignment:
            raise LogicError(f"assignment does not cover atom {f.atom}")
        return assignment[f.atom]
    if isinstance(f, Not):
        return not evaluate_formula(f.body, assignment)
    if isinstance(f, And):
        return all(evaluate_formula(p, assignment) for p in f.parts)
    if isinstance(f, Or):
        return any(evaluate_formula(p, assignment) for p in f.parts)
    if isinstance(f, Implies):
        return (not evaluate_formula(f.antecedent, assignment)) or evaluate_formula(
            f.consequent, assignment
        )
    raise LogicError(f"cannot evaluate {type(f).__name__} node")


# --------------------------------------------------------------------------
# Clause form


@dataclass(frozen=True)
class GroundClauseSet:
    """Target form for the satisfiability engine.

    Variables 0..len(atoms)-1 are the ground atoms; the next aux_count
    variables are definitional atoms introduced by the conversion.
    A literal is +(index+1) or -(index+1). Labels record, per clause,
    which part of a query produced it (may be empty).
    """

    atoms: tuple[Atom, ...]
    aux_count: int
    clauses: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.labels and len(self.labels) != len(self.clauses):
            raise LogicError("clause labels must match clauses one to one")
        n = self.num_vars
        for cl in self.clauses:
            if not cl:
                raise LogicError("clauses must be nonempty")
            for lit in cl:
                if lit == 0 or abs(lit) > n:
                    raise LogicError(f"literal {lit} out of range for {n} variables")

    @property
    def num_vars(self) -> int:
        return len(self.atoms) + self.aux_count

    def label_of(self, clause_index: int) -> str:
        return self.labels[clause_index] if self.labels else ""

    def literal_str(self, lit: int) -> str:
        idx = abs(lit) - 1
        name = str(self.atoms[idx]) if idx < len(self.atoms) else f"aux{idx - len(self.atoms)}"
        return f"not {name}" if lit < 0 else name

    def clause_str(self, clause_index: int) -> str:
        return " or ".join(self.literal_str(lit) for lit in self.clauses[clause_index])

    def to_dimacs(self, comments: bool = True) -> str:
        """DIMACS-style numeric clause lines, one clause per line, zero-terminated."""
        lines: list[str] = []
        if comments:
            for i, atom in enumerate(self.atoms):
                lines.append(f"c {i + 1} {atom}")
            for k in range(self.aux_count):
                lines.append(f"c {len(self.atoms) + k + 1} aux{k}")
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        for cl in self.clauses:
            lines.append(" ".join(str(lit) for lit in cl) + " 0")
        return "\n".join(lines) + "\n"


class ClauseBuilder:
    """Accumulates labeled ground formulas into one equisatisfiable clause set.

    Conversion is definitional: fresh atoms name compound subformulas instead
    of distributing disjunctions, so size stays linear. Satisfiability, not
    logical equivalence, is the contract.
    """

    def __init__(self) -> None:
        self._parts: list[tuple[Formula, str]] = []

    def add(self, formula: Formula, label: str = "") -> "ClauseBuilder":
        for node in walk(formula):
            if isinstance(node, _MODAL_NODES):
                raise LogicError("modal operator encountered in clause conversion")
            if isinstance(node, (ForAll, UniversalizedPlan)):
                raise LogicError("clause conversion requires a ground formula")
            if isinstance(node, AtomF) and not node.atom.is_ground():
                raise LogicError(f"non-ground atom {node.atom} in clause conversion")
        self._parts.append((formula, label))
        return self

    def build(self) -> GroundClauseSet:
        index: dict[Atom, int] = {}
        atoms: list[Atom] = []
        for f, _ in self._parts:
            for atom in atoms_of(f):
                if atom not in index:
                    index[atom] = len(atoms)
                    atoms.append(atom)

        n_real = len(atoms)
        aux_count = 0
        clauses: list[tuple[int, ...]] = []
        labels: list[str] = []

        def new_aux() -> int:
            nonlocal aux_count
            lit = n_real + aux_count + 1
            aux_count += 1
            return lit

        def emit(lits: Sequence[int], label: str) -> None:
            clauses.append(tuple(lits))
            labels.append(label)

        def encode(f: Formula, label: str) -> int:
            if isinstance(f, AtomF):
                return index[f.atom] + 1
            if isinstance(f, Not):
                return -encode(f.body, label)
            if isinstance(f, Implies):
                return encode(Or((Not(f.antecedent), f.consequent)), label)
            if isinstance(f, And):
                if not f.parts:
                    v = new_aux()
                    emit([v], label)
                    return v
                lits = [encode(p, label) for p in f.parts]
                if len(lits) == 1:
                    return lits[0]
                v = new_aux()
                for lit in lits:
                    emit([-v, lit], label)
                emit([v] + [-lit for lit in lits], label)
                return v
            if isinstance(f, Or):
                if not f.parts:
                    v = new_aux()
                    emit([v], label)
                    emit([-v], label)
                    return v
                lits = [encode(p, label) for p in f.parts]
                if len(lits) == 1:
                    return lits[0]
                v = new_aux()
                emit([-v] + lits, label)
                for lit in lits:
                    emit([v, -lit], label)
                return v
            raise LogicError(f"cannot encode {type(f).__name__} node")

        def assert_top(f: Formula, label: str) -> None:
            # Keep top-level structure flat: conjunctions split into their
            # parts and a top disjunction/implication becomes one clause.
            if isinstance(f, And):
                for p in f.parts:
                    assert_top(p, label)
                return
            if isinstance(f, Implies):
                assert_top(Or((Not(f.antecedent), f.consequent)), label)
                return
            if isinstance(f, Or) and f.parts:
                emit([encode(p, label) for p in f.parts], label)
                return
            if isinstance(f, Or):  # empty disjunction: unsatisfiable
                v = new_aux()
                emit([v], label)
                emit([-v], label)
                return
            emit([encode(f, label)], label)

        for f, label in self._parts:
            assert_top(f, label)

        return GroundClauseSet(tuple(atoms), aux_count, tuple(clauses), tuple(labels))


def to_clauses(f: Formula) -> GroundClauseSet:
    """Equisatisfiable clause set for one ground, modal-free formula."""
    return ClauseBuilder().add(f).build()
