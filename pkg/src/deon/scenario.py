"""Scenario data model: agents, plans, constraints, effects, utilities, candidates.

A scenario holds everything empirical. Once validated it is immutable and can
be shared across concurrent checker runs; the principle checks only read it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Mapping

from .logic import (
    AGENT,
    AgentId,
    Atom,
    AtomF,
    Believable,
    Formula,
    ForAll,
    Implies,
    Possible,
    Required,
    SignedAtom,
    Term,
    TRUE,
    UniversalizedPlan,
    agent_const,
    agent_var,
    children,
    conj,
    substitute_signed,
    universalization_trigger,
)

if TYPE_CHECKING:
    from .dsl import SourceSpan


class ScenarioError(Exception):
    """A scenario reference or configuration problem."""


@dataclass(frozen=True)
class PredicateDecl:
    """A predicate signature: argument sorts plus the condition/action flag."""

    name: str
    arg_sorts: tuple[str, ...] = ()
    is_action: bool = False
    span: "SourceSpan | None" = field(default=None, compare=False)

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass(frozen=True)
class ActionPlan:
    """An agent's commitment to take the action whenever the reasons apply.

    Occurrences of the agent inside reasons/action are stored as an agent
    variable named after the agent (the plan placeholder), which is what
    universalization re-binds to each agent in turn.
    """

    id: str
    agent: AgentId
    reasons: tuple[SignedAtom, ...]
    action: SignedAtom
    object_vars: tuple[Term, ...] = ()
    span: "SourceSpan | None" = field(default=None, compare=False)

    @property
    def agent_placeholder(self) -> Term:
        return agent_var(self.agent.name)

    def instantiated_reasons(self) -> tuple[SignedAtom, ...]:
        """Reasons with the placeholder bound to the plan's own agent."""
        binding = {self.agent_placeholder: agent_const(self.agent.name)}
        return tuple(substitute_signed(r, binding) for r in self.reasons)

    def instantiated_action(self) -> SignedAtom:
        binding = {self.agent_placeholder: agent_const(self.agent.name)}
        return substitute_signed(self.action, binding)

    def reasons_formula(self) -> Formula:
        """Own-agent reasons, free object variables universally wrapped."""
        body = conj(tuple(r.as_formula() for r in self.instantiated_reasons()))
        return self._close_object_vars(body)

    def action_formula(self) -> Formula:
        return self._close_object_vars(self.instantiated_action().as_formula())

    def commitment_formula(self) -> Formula:
        """Reasons and action together, as asserted of the plan's own agent."""
        parts = tuple(r.as_formula() for r in self.instantiated_reasons())
        return self._close_object_vars(conj(parts + (self.instantiated_action().as_formula(),)))

    def _close_object_vars(self, body: Formula) -> Formula:
        for var in reversed(self.object_vars):
            body = ForAll(var, body)
        return body


@dataclass(frozen=True)
class ConstraintBase:
    """Global physical constraints plus per-agent rational-belief constraints."""

    physical: tuple[Formula, ...] = ()
    beliefs: Mapping[str, tuple[Formula, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class UniversalizationEffect:
    """An empirical consequence of a plan being adopted by everyone."""

    plan_id: str
    consequence: Formula
    span: "SourceSpan | None" = field(default=None, compare=False)


@dataclass(frozen=True)
class UtilityTable:
    """Net expected utility per (context, action); exact rationals."""

    entries: Mapping[tuple[str, Atom], Fraction] = field(default_factory=dict)

    def get(self, context: str, action: Atom) -> Fraction:
        try:
            return self.entries[(context, action)]
        except KeyError:
            raise ScenarioError(
                f"no utility entry for action {action} in context {context}"
            ) from None


@dataclass(frozen=True)
class CandidateSet:
    """The actions available under a shared set of conditions.

    Availability is asserted by inclusion; the utility principle quantifies
    over exactly this finite set.
    """

    context: str
    condition: tuple[SignedAtom, ...]
    actions: tuple[Atom, ...]
    span: "SourceSpan | None" = field(default=None, compare=False)


@dataclass(frozen=True)
class Scenario:
    name: str
    agents: tuple[AgentId, ...]
    objects: tuple[str, ...] = ()
    predicates: tuple[PredicateDecl, ...] = ()
    plans: tuple[ActionPlan, ...] = ()
    constraints: ConstraintBase = ConstraintBase()
    effects: tuple[UniversalizationEffect, ...] = ()
    utilities: UtilityTable = UtilityTable()
    candidates: tuple[CandidateSet, ...] = ()

    def agent_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.agents)

    def predicate(self, name: str) -> PredicateDecl | None:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def plan(self, plan_id: str) -> ActionPlan:
        for p in self.plans:
            if p.id == plan_id:
                return p
        raise ScenarioError(f"unknown plan {plan_id!r}")

    def plan_map(self) -> dict[str, ActionPlan]:
        return {p.id: p for p in self.plans}

    def candidate_set(self, context: str) -> CandidateSet:
        for cs in self.candidates:
            if cs.context == context:
                return cs
        raise ScenarioError(f"unknown candidate context {context!r}")


def belief_theory(scenario: Scenario, agent: AgentId | str) -> list[Formula]:
    """Everything the agent is rationally required to accept.

    Physical constraints come first (physics is common knowledge), then the
    agent's own belief constraints in declaration order.
    """
    name = agent.name if isinstance(agent, AgentId) else agent
    if name not in scenario.agent_names():
        raise ScenarioError(f"unknown agent {name!r}")
    return list(scenario.constraints.physical) + list(
        scenario.constraints.beliefs.get(name, ())
    )


def effects_for(scenario: Scenario, plan_id: str) -> Formula:
    """Conjunction of the plan's universalization effects, trigger-guarded.

    Each declared consequence becomes (trigger -> consequence); with no
    declared effects the result is the neutral true formula.
    """
    if plan_id not in scenario.plan_map():
        raise ScenarioError(f"unknown plan {plan_id!r}")
    trigger = universalization_trigger(plan_id)
    parts = tuple(
        Implies(AtomF(trigger), e.consequence)
        for e in scenario.effects
        if e.plan_id == plan_id
    )
    return conj(parts) if parts else TRUE


def plan_context(scenario: Scenario, plan: ActionPlan) -> CandidateSet | None:
    """The candidate set whose condition matches the plan's own reasons.

    Plans with free object variables never match (candidate conditions are
    ground). Returns None when no context is declared for these conditions.
    """
    if plan.object_vars:
        return None
    reasons = frozenset(plan.instantiated_reasons())
    for cs in scenario.candidates:
        if frozenset(cs.condition) == reasons:
            return cs
    return None


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Diagnostic:
    """One violated scenario rule, naming the offending element."""

    element: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.element}: {self.message} [{self.rule}]"


def validate(scenario: Scenario) -> list[Diagnostic]:
    """Check every scenario invariant; an empty list means all hold.

    Total and deterministic: diagnostics are the output, nothing raises.
    """
    out: list[Diagnostic] = []

    def add(element: str, rule: str, message: str) -> None:
        out.append(Diagnostic(element, rule, message))

    agent_names = [a.name for a in scenario.agents]
    if not scenario.agents:
        add("scenario", "no-agents", "a scenario needs at least one agent")
    for name in _duplicates(agent_names):
        add(f"agent {name}", "duplicate", f"agent {name} declared more than once")
    for name in _duplicates(list(scenario.objects)):
        add(f"object {name}", "duplicate", f"object {name} declared more than once")
    for name in sorted(set(agent_names) & set(scenario.objects)):
        add(f"object {name}", "name-clash", f"{name} is declared both as agent and object")

    predicates: dict[str, PredicateDecl] = {}
    for decl in scenario.predicates:
        if decl.name in predicates:
            add(f"predicate {decl.name}", "duplicate", f"predicate {decl.name} declared more than once")
        predicates[decl.name] = decl

    def check_term(element: str, term: Term, expected_sort: str) -> None:
        if term.sort != expected_sort:
            add(element, "kind-mismatch",
                f"term {term.name} has {term.sort} kind where {expected_sort} is expected")
        if not term.is_var:
            pool = agent_names if term.sort == AGENT else scenario.objects
            if term.name not in pool:
                add(element, "unknown-constant",
                    f"unknown {term.sort} constant {term.name}")

    def check_atom(element: str, atom: Atom, bound: frozenset[Term] = frozenset()) -> None:
        decl = predicates.get(atom.predicate)
        if decl is None:
            add(element, "unknown-predicate", f"unknown predicate {atom.predicate}")
            return
        if len(atom.args) != decl.arity:
            add(element, "arity-mismatch",
                f"predicate {atom.predicate} takes {decl.arity} arguments, got {len(atom.args)}")
            return
        for term, sort in zip(atom.args, decl.arg_sorts):
            check_term(element, term, sort)
            if term.is_var and term not in bound:
                add(element, "unbound-variable", f"variable {term.name} is not bound here")

    def check_formula(element: str, f: Formula) -> None:
        def go(node: Formula, bound: frozenset[Term]) -> None:
            if isinstance(node, (Possible, Believable, Required)):
                add(element, "modal-in-constraint",
                    "constraint formulas must be modal-free")
                return
            if isinstance(node, UniversalizedPlan):
                add(element, "universalization-in-constraint",
                    "universal-adoption nodes are built by the checker, never authored")
                return
            if isinstance(node, AtomF):
                check_atom(element, node.atom, bound)
                return
            if isinstance(node, ForAll):
                go(node.body, bound | {node.var})
                return
            for c in children(node):
                go(c, bound)

        go(f, frozenset())

    plan_ids: dict[str, ActionPlan] = {}
    for plan in scenario.plans:
        element = f"plan {plan.id}"
        if plan.id in plan_ids:
            add(element, "duplicate", f"plan id {plan.id} declared more than once")
        plan_ids[plan.id] = plan
        if plan.agent.name not in agent_names:
            add(element, "unknown-agent", f"unknown agent {plan.agent.name}")
        if not plan.reasons:
            add(element, "empty-reasons", "a plan needs at least one reason")
        allowed_vars = frozenset((plan.agent_placeholder,) + plan.object_vars)
        for sa in plan.reasons + (plan.action,):
            check_atom(element, sa.atom, bound=allowed_vars)
            for term in sa.atom.args:
                if term.is_var and term not in allowed_vars:
                    add(element, "unbound-variable",
                        f"variable {term.name} is neither the plan agent nor a declared object variable")
        action_decl = predicates.get(plan.action.atom.predicate)
        if action_decl is not None and not action_decl.is_action:
            add(element, "not-an-action",
                f"predicate {plan.action.atom.predicate} is not declared as an action")
        if plan.object_vars and not scenario.objects:
            add(element, "no-object-constants",
                "plan has free object variables but the scenario declares no object constants")

    for i, f in enumerate(scenario.constraints.physical):
        check_formula(f"physics constraint {i + 1}", f)
    for agent, formulas in scenario.constraints.beliefs.items():
        if agent not in agent_names:
            add(f"belief {agent}", "unknown-agent", f"unknown agent {agent}")
        for i, f in enumerate(formulas):
            check_formula(f"belief of {agent}, constraint {i + 1}", f)

    for effect in scenario.effects:
        element = f"on_universalized {effect.plan_id}"
        if effect.plan_id not in plan_ids:
            add(element, "unknown-plan", f"unknown plan {effect.plan_id}")
        check_formula(element, effect.consequence)

    contexts: dict[str, CandidateSet] = {}
    for cs in scenario.candidates:
        element = f"candidates {cs.context}"
        if cs.context in contexts:
            add(element, "duplicate", f"candidate context {cs.context} declared more than once")
        contexts[cs.context] = cs
        if not cs.actions:
            add(element, "empty-candidates", "a candidate set needs at least one action")
        for sa in cs.condition:
            check_atom(element, sa.atom)
        for atom in cs.actions:
            check_atom(element, atom)
            decl = predicates.get(atom.predicate)
            if decl is not None and not decl.is_action:
                add(element, "not-an-action",
                    f"candidate {atom} is not declared as an action")
    seen_conditions: dict[frozenset[SignedAtom], str] = {}
    for cs in scenario.candidates:
        key = frozenset(cs.condition)
        if key in seen_conditions and seen_conditions[key] != cs.context:
            add(f"candidates {cs.context}", "ambiguous-context",
                f"contexts {seen_conditions[key]} and {cs.context} share the same condition")
        seen_conditions.setdefault(key, cs.context)

    for (context, atom), value in scenario.utilities.entries.items():
        element = f"utility {context}"
        cs = contexts.get(context)
        if cs is None:
            add(element, "unknown-context", f"unknown candidate context {context}")
            continue
        check_atom(element, atom)
        if atom not in cs.actions:
            add(element, "not-a-candidate",
                f"utility entry {atom} is not among the context's candidate actions")
    for cs in scenario.candidates:
        for atom in cs.actions:
            if (cs.context, atom) not in scenario.utilities.entries:
                add(f"utility {cs.context}", "missing-utility",
                    f"candidate action {atom} has no utility entry")

    for plan in scenario.plans:
        ctx = plan_context(scenario, plan)
        if ctx is None:
            continue
        if plan.action.negated:
            add(f"plan {plan.id}", "candidate-missing-action",
                f"plan matches context {ctx.context} but its action is negated and cannot be a candidate")
        elif plan.instantiated_action().atom not in ctx.actions:
            add(f"plan {plan.id}", "candidate-missing-action",
                f"plan's own action is missing from candidate context {ctx.context}")

    return out


def _duplicates(names: list[str]) -> list[str]:
    seen: set[str] = set()
    dups: list[str] = []
    for name in names:
        if name in seen:
            dups.append(name)
        seen.add(name)
    return dups
