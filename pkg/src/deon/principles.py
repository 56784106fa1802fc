"""The three plan principles and the fixpoint verdict engine.

Each principle produces a necessary condition for a plan to be in the clear;
the scenario's constraints decide those conditions through satisfiability
queries. `evaluate` is a pure function of the scenario: per-plan checks
within a round only read the immutable scenario and the previous round's
statuses, so they could run concurrently, with round boundaries as the
synchronization points.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction

from .logic import (
    Atom,
    ClauseBuilder,
    Formula,
    GroundClauseSet,
    TRUE,
    UniversalizedPlan,
    ground,
)
from .sat import DEFAULT_BUDGET, BudgetExhausted, ConflictExplanation, Model, SatResult, solve
from .scenario import (
    ActionPlan,
    Scenario,
    ScenarioError,
    belief_theory,
    effects_for,
    plan_context,
)

GENERALIZATION = "generalization"
UTILITY = "utility"
AUTONOMY = "autonomy"

PASS = "pass"
FAIL = "fail"
INDETERMINATE = "indeterminate"

ETHICAL = "ethical"
UNETHICAL = "unethical"


# --------------------------------------------------------------------------
# Evidence carried by verdicts


@dataclass(frozen=True)
class Witness:
    """A satisfying model showing the checked condition can hold."""

    clause_set: GroundClauseSet
    model: Model


@dataclass(frozen=True)
class QueryConflict:
    """The query is unsatisfiable; the clauses name what clashed."""

    clause_set: GroundClauseSet
    conflict: ConflictExplanation


@dataclass(frozen=True)
class ReasonsContradiction:
    """Autonomy held through the second disjunct: the two plans' reasons
    cannot jointly apply, so the actions can never come into conflict."""

    other_plan: str
    clause_set: GroundClauseSet
    conflict: ConflictExplanation


@dataclass(frozen=True)
class PlanInterference:
    """Autonomy failed: the actions cannot coexist and the reasons can."""

    other_plan: str
    actions_clause_set: GroundClauseSet
    actions_conflict: ConflictExplanation
    reasons_clause_set: GroundClauseSet
    reasons_model: Model


@dataclass(frozen=True)
class Dominated:
    """An eligible alternative carries strictly higher utility."""

    context: str
    action: Atom
    utility: Fraction
    dominator: Atom
    dominator_utility: Fraction


@dataclass(frozen=True)
class UtilityComparison:
    """The plan's action is utility-maximal among eligible alternatives."""

    context: str
    action: Atom
    utility: Fraction
    alternatives: tuple[tuple[Atom, Fraction, bool], ...]  # (action, utility, eligible)


@dataclass(frozen=True)
class AutonomyClear:
    """Every protected plan of other agents was checked and none conflicts.

    Each pair records how it held: a Witness (the actions can coexist,
    first disjunct) or a ReasonsContradiction (second disjunct).
    """

    pairs: tuple[tuple[str, object], ...]

    @property
    def checked_plans(self) -> tuple[str, ...]:
        return tuple(other for other, _ in self.pairs)


@dataclass(frozen=True)
class BudgetNote:
    note: str


@dataclass(frozen=True)
class Note:
    note: str


@dataclass(frozen=True)
class PrincipleVerdict:
    principle: str  # GENERALIZATION | UTILITY | AUTONOMY
    status: str  # PASS | FAIL | INDETERMINATE
    evidence: object


@dataclass(frozen=True)
class PlanVerdict:
    plan_id: str
    checks: tuple[PrincipleVerdict, ...]
    overall: str  # ETHICAL | UNETHICAL | INDETERMINATE

    def check(self, principle: str) -> PrincipleVerdict:
        for c in self.checks:
            if c.principle == principle:
                return c
        raise KeyError(principle)


@dataclass(frozen=True)
class VerdictSet:
    scenario: str
    plans: tuple[PlanVerdict, ...]
    rounds: int
    stable: bool

    def plan(self, plan_id: str) -> PlanVerdict:
        for pv in self.plans:
            if pv.plan_id == plan_id:
                return pv
        raise KeyError(plan_id)

    def statuses(self) -> dict[str, str]:
        return {pv.plan_id: pv.overall for pv in self.plans}


@dataclass(frozen=True)
class ModalQuery:
    """One satisfiability-backed modal decision, for auditing and the
    believable/required duality check."""

    check: str
    agent: str
    clause_set: GroundClauseSet
    satisfiable: bool | None  # None when the budget ran out


# --------------------------------------------------------------------------
# Modal decision paths

# Both reduce to the same satisfiability question against the agent's
# rational-constraint theory, which is exactly why "can believe possible"
# and "not required to deny possible" must always agree.


def can_rationally_believe_possible(cs: GroundClauseSet, budget: int = DEFAULT_BUDGET) -> bool:
    """Whether the encoded state of affairs is consistent with the theory."""
    return solve(cs, budget).satisfiable


def rationally_required_to_deny_possible(cs: GroundClauseSet, budget: int = DEFAULT_BUDGET) -> bool:
    """Whether the theory refutes the encoded state of affairs."""
    return not solve(cs, budget).satisfiable


def _decide(
    cs: GroundClauseSet,
    budget: int,
    query_log: list[ModalQuery] | None,
    check: str,
    agent: str,
) -> SatResult | None:
    try:
        result = solve(cs, budget)
    except BudgetExhausted:
        if query_log is not None:
            query_log.append(ModalQuery(check, agent, cs, None))
        return None
    if query_log is not None:
        query_log.append(ModalQuery(check, agent, cs, result.satisfiable))
    return result


# --------------------------------------------------------------------------
# Query construction


def _constraint_parts(scenario: Scenario, agent: str) -> list[tuple[Formula, str]]:
    n_physical = len(scenario.constraints.physical)
    parts = []
    for i, f in enumerate(belief_theory(scenario, agent)):
        label = "physical constraint" if i < n_physical else f"rational constraint of agent {agent}"
        parts.append((f, label))
    return parts


def generalization_query(plan: ActionPlan, scenario: Scenario) -> GroundClauseSet:
    """Ground query behind the generalization check.

    Conjunction of: every agent adopting the plan (material conditionals plus
    the universalization trigger), the plan's declared universalization
    effects, the plan's own reasons and action, and the agent's
    rational-constraint theory. The plan passes iff this is satisfiable.
    """
    agents, objects, plans = scenario.agents, scenario.objects, scenario.plan_map()
    builder = ClauseBuilder()
    builder.add(
        ground(UniversalizedPlan(plan.id), agents, objects, plans),
        f"universal adoption of plan {plan.id}",
    )
    effects = effects_for(scenario, plan.id)
    if effects != TRUE:
        builder.add(
            ground(effects, agents, objects),
            f"universalization effect of plan {plan.id}",
        )
    builder.add(
        ground(plan.commitment_formula(), agents, objects),
        f"reasons and action of plan {plan.id}",
    )
    for f, label in _constraint_parts(scenario, plan.agent.name):
        builder.add(ground(f, agents, objects), label)
    return builder.build()


def autonomy_pair_queries(
    plan: ActionPlan, other: ActionPlan, scenario: Scenario
) -> tuple[GroundClauseSet, GroundClauseSet]:
    """The two disjunct queries for one autonomy pair, from `plan`'s standpoint.

    First: both actions together with the acting agent's theory (pass if
    satisfiable). Second: both plans' reasons together with the same theory
    (pass if unsatisfiable: the plans can never come into conflict).
    """
    agents, objects = scenario.agents, scenario.objects
    constraints = _constraint_parts(scenario, plan.agent.name)

    actions = ClauseBuilder()
    actions.add(ground(plan.action_formula(), agents, objects), f"action of plan {plan.id}")
    actions.add(ground(other.action_formula(), agents, objects), f"action of plan {other.id}")
    for f, label in constraints:
        actions.add(ground(f, agents, objects), label)

    reasons = ClauseBuilder()
    reasons.add(ground(plan.reasons_formula(), agents, objects), f"reasons of plan {plan.id}")
    reasons.add(ground(other.reasons_formula(), agents, objects), f"reasons of plan {other.id}")
    for f, label in constraints:
        reasons.add(ground(f, agents, objects), label)

    return actions.build(), reasons.build()


# --------------------------------------------------------------------------
# Principle checks


def check_generalization(
    plan: ActionPlan,
    scenario: Scenario,
    budget: int = DEFAULT_BUDGET,
    query_log: list[ModalQuery] | None = None,
) -> PrincipleVerdict:
    """Can the agent rationally believe everyone could adopt the plan while
    the agent's reasons still apply and the action still happens?"""
    cs = generalization_query(plan, scenario)
    result = _decide(cs, budget, query_log, f"generalization:{plan.id}", plan.agent.name)
    if result is None:
        return PrincipleVerdict(
            GENERALIZATION, INDETERMINATE,
            BudgetNote(f"decision budget exhausted on the generalization query for {plan.id}"),
        )
    if result.satisfiable:
        assert result.model is not None
        return PrincipleVerdict(GENERALIZATION, PASS, Witness(cs, result.model))
    assert result.conflict is not None
    return PrincipleVerdict(GENERALIZATION, FAIL, QueryConflict(cs, result.conflict))


def check_utility(
    plan: ActionPlan,
    scenario: Scenario,
    eligible: frozenset[tuple[str, Atom]] | None = None,
    query_log: list[ModalQuery] | None = None,
) -> PrincipleVerdict:
    """Does the action carry at least as much utility as every eligible
    alternative available under the same conditions?

    `eligible` filters the alternatives to those currently in the clear
    (None means all candidates). The believability wrapper collapses to a
    point comparison: the scenario supplies the agent's expected utilities
    directly. A missing utility entry is a configuration error, not a fail.
    """
    context = plan_context(scenario, plan)
    if context is None:
        return PrincipleVerdict(
            UTILITY, PASS,
            Note("no candidate actions are declared for this plan's conditions"),
        )
    if plan.action.negated:
        raise ScenarioError(
            f"plan {plan.id} has a negated action and cannot enter utility comparison"
        )
    own = plan.instantiated_action().atom
    own_utility = scenario.utilities.get(context.context, own)
    alternatives: list[tuple[Atom, Fraction, bool]] = []
    dominator: tuple[Atom, Fraction] | None = None
    for act in context.actions:
        if act == own:
            continue
        utility = scenario.utilities.get(context.context, act)
        is_eligible = eligible is None or (context.context, act) in eligible
        alternatives.append((act, utility, is_eligible))
        if is_eligible and utility > own_utility:
            if dominator is None or utility > dominator[1]:
                dominator = (act, utility)
    if dominator is not None:
        return PrincipleVerdict(
            UTILITY, FAIL,
            Dominated(context.context, own, own_utility, dominator[0], dominator[1]),
        )
    return PrincipleVerdict(
        UTILITY, PASS,
        UtilityComparison(context.context, own, own_utility, tuple(alternatives)),
    )


def check_autonomy_pair(
    plan: ActionPlan,
    other: ActionPlan,
    scenario: Scenario,
    budget: int = DEFAULT_BUDGET,
    query_log: list[ModalQuery] | None = None,
) -> PrincipleVerdict:
    """Is `plan` consistent with one other agent's plan?

    Passes if the agent can rationally believe both actions can hold
    together, or can rationally believe the two plans' reasons cannot
    jointly apply.
    """
    if plan.agent == other.agent:
        raise ScenarioError("autonomy is checked between plans of distinct agents")
    cs_actions, cs_reasons = autonomy_pair_queries(plan, other, scenario)
    tag = f"autonomy:{plan.id}:{other.id}"
    d1 = _decide(cs_actions, budget, query_log, f"{tag}:actions", plan.agent.name)
    if d1 is None:
        return PrincipleVerdict(
            AUTONOMY, INDETERMINATE,
            BudgetNote(f"decision budget exhausted checking {plan.id} against {other.id}"),
        )
    if d1.satisfiable:
        assert d1.model is not None
        return PrincipleVerdict(AUTONOMY, PASS, Witness(cs_actions, d1.model))
    d2 = _decide(cs_reasons, budget, query_log, f"{tag}:reasons", plan.agent.name)
    if d2 is None:
        return PrincipleVerdict(
            AUTONOMY, INDETERMINATE,
            BudgetNote(f"decision budget exhausted checking {plan.id} against {other.id}"),
        )
    if not d2.satisfiable:
        assert d2.conflict is not None
        return PrincipleVerdict(
            AUTONOMY, PASS, ReasonsContradiction(other.id, cs_reasons, d2.conflict)
        )
    assert d1.conflict is not None and d2.model is not None
    return PrincipleVerdict(
        AUTONOMY, FAIL,
        PlanInterference(other.id, cs_actions, d1.conflict, cs_reasons, d2.model),
    )


def check_autonomy(
    plan: ActionPlan,
    scenario: Scenario,
    protected: frozenset[str] | None = None,
    budget: int = DEFAULT_BUDGET,
    query_log: list[ModalQuery] | None = None,
) -> PrincipleVerdict:
    """Check `plan` against every protected plan of every other agent.

    The first failing pair decides a fail; plans of the agent itself are
    never checked against each other. `protected` is the set of plan ids
    still in the clear (None protects everything).
    """
    pairs: list[tuple[str, object]] = []
    indeterminate: PrincipleVerdict | None = None
    for other in scenario.plans:
        if other.id == plan.id or other.agent == plan.agent:
            continue
        if protected is not None and other.id not in protected:
            continue
        verdict = check_autonomy_pair(plan, other, scenario, budget, query_log)
        if verdict.status == FAIL:
            return verdict
        if verdict.status == INDETERMINATE and indeterminate is None:
            indeterminate = verdict
        pairs.append((other.id, verdict.evidence))
    if indeterminate is not None:
        return indeterminate
    if not pairs:
        return PrincipleVerdict(
            AUTONOMY, PASS, Note("no protected plans of other agents to conflict with")
        )
    return PrincipleVerdict(AUTONOMY, PASS, AutonomyClear(tuple(pairs)))


# --------------------------------------------------------------------------
# Fixpoint engine


def eligible_actions(
    scenario: Scenario, protected: frozenset[str]
) -> frozenset[tuple[str, Atom]]:
    """Candidate (context, action) pairs usable in utility comparison.

    A candidate stays eligible unless some declared plan carries exactly
    that context and action and has dropped out of the protected set;
    candidates with no declared plan are never demonstrated unethical, so
    they remain eligible.
    """
    pairs: set[tuple[str, Atom]] = set()
    for cs in scenario.candidates:
        for act in cs.actions:
            owners = [
                p.id
                for p in scenario.plans
                if not p.action.negated
                and p.instantiated_action().atom == act
                and (ctx := plan_context(scenario, p)) is not None
                and ctx.context == cs.context
            ]
            if all(pid in protected for pid in owners):
                pairs.add((cs.context, act))
    return frozenset(pairs)


def _check_plan(
    plan: ActionPlan,
    scenario: Scenario,
    protected: frozenset[str],
    eligible: frozenset[tuple[str, Atom]],
    budget: int,
    query_log: list[ModalQuery] | None,
) -> PlanVerdict:
    checks = (
        check_generalization(plan, scenario, budget, query_log),
        check_utility(plan, scenario, eligible, query_log),
        check_autonomy(plan, scenario, protected, budget, query_log),
    )
    if any(c.status == FAIL for c in checks):
        overall = UNETHICAL
    elif all(c.status == PASS for c in checks):
        overall = ETHICAL
    else:
        overall = INDETERMINATE
    return PlanVerdict(plan.id, checks, overall)


def evaluate(
    scenario: Scenario,
    budget: int = DEFAULT_BUDGET,
    query_log: list[ModalQuery] | None = None,
) -> VerdictSet:
    """Run all three checks on every plan to a fixpoint.

    Starts optimistically (every plan presumed in the clear), then each
    round recomputes all checks using the previous round's outcome for
    eligibility and autonomy protection: protection is only withdrawn after
    a demonstrated failure. Indeterminate plans stay protected, which is the
    conservative reading. Terminates when two consecutive rounds agree or
    after len(plans)+1 rounds; plans still flipping at the bound are
    reported indeterminate with the stability flag false. Deterministic and
    independent of plan declaration order.
    """
    plans = scenario.plans
    if not plans:
        return VerdictSet(scenario.name, (), rounds=1, stable=True)

    assumed = {p.id: ETHICAL for p in plans}
    max_rounds = len(plans) + 1
    rounds = 0
    stable = False
    current: list[PlanVerdict] = []
    statuses: dict[str, str] = dict(assumed)
    last_in: dict[str, str] = dict(assumed)

    while rounds < max_rounds:
        rounds += 1
        protected = frozenset(
            pid for pid, status in assumed.items() if status in (ETHICAL, INDETERMINATE)
        )
        eligible = eligible_actions(scenario, protected)
        current = [
            _check_plan(p, scenario, protected, eligible, budget, query_log) for p in plans
        ]
        statuses = {pv.plan_id: pv.overall for pv in current}
        if statuses == assumed:
            stable = True
            break
        last_in = assumed
        assumed = statuses

    if not stable:
        oscillating = {pid for pid, status in statuses.items() if status != last_in[pid]}
        current = [
            dataclasses.replace(pv, overall=INDETERMINATE) if pv.plan_id in oscillating else pv
            for pv in current
        ]

    return VerdictSet(scenario.name, tuple(current), rounds, stable)
