"""Runtime refinement: replace abstract (goal-only) activities with chains
of concrete catalog fragments.

Planning is a deterministic greedy weighted set cover (pick the entry
minimizing cost per newly covered concept, ties by smallest fragment id)
followed by a prerequisite toposort.  The planner interface is narrow on
purpose so a richer planner can be swapped in behind ``plan_goal``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import (
    ChainTooLong,
    DepthExceeded,
    PrerequisiteCycle,
    ResultInvalid,
    SchemaViolation,
    UncoverableGoal,
)
from .gamification import RulePack
from .model import (
    AbstractConstraints,
    AbstractData,
    ConditionSpec,
    Edge,
    Kind,
    LearningFragment,
    validate_fragment,
)


@dataclass(frozen=True)
class CatalogEntry:
    fragment_id: str
    version: int
    provides: frozenset[str]
    requires: frozenset[str] = frozenset()
    cost: float = 1.0
    kinds_present: frozenset[str] = frozenset()
    modalities_required: frozenset[str] = frozenset()
    gamification_tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class FragmentCatalog:
    entries: tuple[CatalogEntry, ...]

    def __post_init__(self):
        ids = [e.fragment_id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise SchemaViolation("catalog entry ids must be unique")
        for e in self.entries:
            if not e.provides:
                raise SchemaViolation(f"catalog entry {e.fragment_id!r} provides nothing")


@dataclass(frozen=True)
class RefinementLimits:
    max_depth: int = 3
    max_chain_length: int = 16

    def __post_init__(self):
        if self.max_depth < 1 or self.max_chain_length < 1:
            raise ValueError("refinement limits must be positive")


@dataclass(frozen=True)
class Plan:
    entries: tuple[CatalogEntry, ...]
    covered: frozenset[str]
    total_cost: float

    @property
    def fragment_ids(self) -> list[str]:
        return [e.fragment_id for e in self.entries]


# ---------------------------------------------------------------------------
# Catalog documents


def catalog_from_dict(doc) -> FragmentCatalog:
    if isinstance(doc, dict):
        doc = doc.get("entries")
    if not isinstance(doc, list):
        raise SchemaViolation("catalog must be an array of entries")
    entries = []
    for i, raw in enumerate(doc):
        where = f"entries[{i}]"
        if not isinstance(raw, dict) or not isinstance(raw.get("fragment_id"), str):
            raise SchemaViolation(f"{where}: needs a string fragment_id")
        cost = raw.get("cost", 1.0)
        if isinstance(cost, bool) or not isinstance(cost, (int, float)) or cost <= 0:
            raise SchemaViolation(f"{where}: cost must be a positive number")
        version = raw.get("version", 1)
        if isinstance(version, bool) or not isinstance(version, int):
            raise SchemaViolation(f"{where}: version must be an integer")
        def strset(key):
            value = raw.get(key, [])
            if not isinstance(value, list) or not all(isinstance(s, str) for s in value):
                raise SchemaViolation(f"{where}: {key} must be a list of strings")
            return frozenset(value)
        entries.append(
            CatalogEntry(
                fragment_id=raw["fragment_id"],
                version=version,
                provides=strset("provides"),
                requires=strset("requires"),
                cost=float(cost),
                kinds_present=strset("kinds_present"),
                modalities_required=strset("modalities_required"),
                gamification_tags=strset("gamification_tags"),
            )
        )
    return FragmentCatalog(entries=tuple(entries))


def catalog_to_dict(catalog: FragmentCatalog) -> dict:
    return {
        "entries": [
            {
                "fragment_id": e.fragment_id,
                "version": e.version,
                "provides": sorted(e.provides),
                "requires": sorted(e.requires),
                "cost": e.cost,
                "kinds_present": sorted(e.kinds_present),
                "modalities_required": sorted(e.modalities_required),
                "gamification_tags": sorted(e.gamification_tags),
            }
            for e in catalog.entries
        ]
    }


def load_catalog(document: bytes | str) -> FragmentCatalog:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(str(exc)) from exc
    return catalog_from_dict(doc)


# ---------------------------------------------------------------------------
# Planning


def _passes_filters(
    entry: CatalogEntry,
    constraints: AbstractConstraints | None,
    capabilities: frozenset[str] | None,
) -> bool:
    if constraints is not None:
        if constraints.allowed_kinds is not None and not entry.kinds_present <= constraints.allowed_kinds:
            return False
        if constraints.required_modality is not None:
            if not entry.modalities_required <= {constraints.required_modality}:
                return False
    if capabilities is not None and not entry.modalities_required <= capabilities:
        return False
    return True


def _greedy_cover(
    targets: frozenset[str],
    known: frozenset[str],
    candidates: list[CatalogEntry],
    selected: list[CatalogEntry],
    covered: set[str],
):
    """Extend ``selected`` until targets ⊆ known ∪ covered."""
    chosen_ids = {e.fragment_id for e in selected}
    while not targets <= known | covered:
        best = None
        best_ratio = None
        for entry in candidates:
            if entry.fragment_id in chosen_ids:
                continue
            # cost per newly covered *target* concept; concepts outside the
            # goal don't make an entry look cheaper
            new = (entry.provides & targets) - covered - known
            if not new:
                continue
            ratio = entry.cost / len(new)
            if best is None or ratio < best_ratio or (
                ratio == best_ratio and entry.fragment_id < best.fragment_id
            ):
                best, best_ratio = entry, ratio
        if best is None:
            raise UncoverableGoal(targets - known - covered)
        selected.append(best)
        chosen_ids.add(best.fragment_id)
        covered |= best.provides


def _toposort(selected: list[CatalogEntry], known: frozenset[str]) -> list[CatalogEntry]:
    """Order by requires→provides; an entry follows every selected entry
    providing any of its requires.  Remaining ties by fragment_id."""
    by_id = {e.fragment_id: e for e in selected}
    preds: dict[str, set[str]] = {e.fragment_id: set() for e in selected}
    for e in selected:
        for other in selected:
            if other.fragment_id != e.fragment_id and other.provides & e.requires:
                preds[e.fragment_id].add(other.fragment_id)
    ordered: list[CatalogEntry] = []
    remaining = set(preds)
    while remaining:
        ready = sorted(fid for fid in remaining if not preds[fid] & remaining)
        if not ready:
            raise PrerequisiteCycle(sorted(remaining))
        fid = ready[0]
        remaining.discard(fid)
        ordered.append(by_id[fid])
    return ordered


def plan_goal(
    goal,
    known,
    catalog: FragmentCatalog,
    constraints: AbstractConstraints | None = None,
    capabilities=None,
    max_length: int | None = None,
) -> Plan:
    """Greedy weighted set cover over the filtered catalog, then a
    prerequisite toposort; prerequisite gaps trigger further cover passes."""
    goal = frozenset(goal)
    known = frozenset(known)
    if not goal:
        raise ValueError("goal must be non-empty")
    if capabilities is not None:
        capabilities = frozenset(capabilities)
    candidates = [
        e for e in catalog.entries if _passes_filters(e, constraints, capabilities)
    ]
    selected: list[CatalogEntry] = []
    covered: set[str] = set()
    _greedy_cover(goal, known, candidates, selected, covered)
    # close over prerequisites: anything required but neither known nor
    # provided by the selection gets its own cover pass
    while True:
        provided = known | covered
        missing = frozenset().union(*(e.requires for e in selected)) - provided if selected else frozenset()
        if not missing:
            break
        _greedy_cover(frozenset(missing), provided, candidates, selected, covered)
    limit = max_length
    if constraints is not None and constraints.max_nodes is not None:
        limit = constraints.max_nodes if limit is None else min(limit, constraints.max_nodes)
    if limit is not None and len(selected) > limit:
        raise ChainTooLong(f"plan needs {len(selected)} fragments, limit is {limit}")
    ordered = _toposort(selected, known)
    return Plan(
        entries=tuple(ordered),
        covered=frozenset(covered),
        total_cost=sum(e.cost for e in ordered),
    )


# ---------------------------------------------------------------------------
# Refinement


def _namespaced(prefix: str, position: int, original: str) -> str:
    return f"{prefix}.{position}.{original}"


def _must_reach_known(
    nodes: dict, edges: list[Edge], entry: str, grants: dict[str, frozenset[str]], target: str
) -> frozenset[str]:
    """Concepts guaranteed acquired on every path from entry to target:
    decreasing fixpoint of known(n) = ⋂ over preds p of known(p) ∪ grant(p)."""
    universe = frozenset().union(*grants.values()) if grants else frozenset()
    preds: dict[str, list[str]] = {nid: [] for nid in nodes}
    for e in edges:
        if e.source in preds and e.target in preds:
            preds[e.target].append(e.source)
    known = {nid: universe for nid in nodes}
    known[entry] = frozenset()
    changed = True
    while changed:
        changed = False
        for nid in nodes:
            if nid == entry:
                continue
            incoming = preds[nid]
            if not incoming:
                value = frozenset()
            else:
                value = known[incoming[0]] | grants.get(incoming[0], frozenset())
                for p in incoming[1:]:
                    value &= known[p] | grants.get(p, frozenset())
            if value != known[nid]:
                known[nid] = value
                changed = True
    return known.get(target, frozenset())


def _bfs_order(nodes: dict, edges: list[Edge], entry: str) -> list[str]:
    adjacency: dict[str, list[str]] = {nid: [] for nid in nodes}
    for e in edges:
        if e.source in adjacency and e.target in adjacency:
            adjacency[e.source].append(e.target)
    order: list[str] = []
    seen: set[str] = set()
    queue = [entry] if entry in nodes else []
    while queue:
        nid = queue.pop(0)
        if nid in seen:
            continue
        seen.add(nid)
        order.append(nid)
        queue.extend(adjacency[nid])
    # unreachable nodes last, in declaration order (invalid inputs only)
    order.extend(nid for nid in nodes if nid not in seen)
    return order


def refine(
    fragment: LearningFragment,
    catalog: FragmentCatalog,
    capabilities=None,
    limits: RefinementLimits = RefinementLimits(),
    resolve=None,
) -> LearningFragment:
    """Replace every abstract node with its planned fragment chain, spliced
    linearly; nested abstract nodes are refined recursively up to
    ``limits.max_depth`` stages per original abstract node.

    ``resolve(fragment_id, version)`` must return the catalog fragment.
    """
    if resolve is None:
        raise ValueError("refine needs a fragment resolver")
    if capabilities is not None:
        capabilities = frozenset(capabilities)

    nodes = dict(fragment.nodes)
    edges = list(fragment.edges)
    entry = fragment.entry
    grants: dict[str, frozenset[str]] = {}
    depth: dict[str, int] = {}

    while True:
        abstract_ids = [
            nid for nid in _bfs_order(nodes, edges, entry)
            if nodes[nid].kind is Kind.ABSTRACT
        ]
        if not abstract_ids:
            break
        target = abstract_ids[0]
        stage = depth.get(target, 1)
        if stage > limits.max_depth:
            raise DepthExceeded(
                f"abstract node {target!r} still unresolved after {limits.max_depth} stages"
            )
        data = nodes[target].kind_data
        if not isinstance(data, AbstractData):
            raise ResultInvalid(f"node {target!r} is abstract without AbstractData")
        known = _must_reach_known(nodes, edges, entry, grants, target)
        plan = plan_goal(
            data.goal,
            known,
            catalog,
            constraints=data.constraints,
            capabilities=capabilities,
            max_length=limits.max_chain_length,
        )
        chain_entry = _splice(nodes, edges, grants, depth, target, stage, plan, resolve)
        if target == entry:
            entry = chain_entry

    refined = replace(fragment, nodes=nodes, edges=tuple(edges), entry=entry)
    report = validate_fragment(refined)
    if not report.ok:
        raise ResultInvalid(f"refined fragment invalid: {report.errors[0]}")
    return refined


def _splice(nodes, edges, grants, depth, target, stage, plan: Plan, resolve) -> str:
    """Replace node ``target`` in place with the plan's fragment chain;
    returns the chain's entry node id."""
    sub_fragments = []
    for entry in plan.entries:
        sub = resolve(entry.fragment_id, entry.version)
        sub_fragments.append((entry, sub))

    # build namespaced node blocks, preserving each sub-fragment's order
    new_nodes: dict[str, object] = {}
    entry_ids: list[str] = []
    exit_ids: list[list[str]] = []
    new_edges: list[Edge] = []
    for k, (entry, sub) in enumerate(sub_fragments, start=1):
        ns = lambda orig, k=k: _namespaced(target, k, orig)
        for nid, node in sub.nodes.items():
            renamed = replace(node, id=ns(nid))
            new_nodes[renamed.id] = renamed
            if node.kind is Kind.ABSTRACT:
                depth[renamed.id] = stage + 1
        entry_ids.append(ns(sub.entry))
        exits = [ns(x) for x in sub.exit_nodes()]
        exit_ids.append(exits)
        for x in exits:
            grants[x] = grants.get(x, frozenset()) | entry.provides
        for e in sub.edges:
            new_edges.append(
                replace(e, id=ns(e.id), source=ns(e.source), target=ns(e.target))
            )
        if k < len(sub_fragments):
            for x in exits:
                new_edges.append(
                    Edge(
                        id=f"{x}.next",
                        source=x,
                        target=_namespaced(target, k + 1, sub_fragments[k][1].entry),
                        condition=ConditionSpec(builtin="pass"),
                    )
                )

    last_exits = exit_ids[-1]
    chain_entry = entry_ids[0]

    # splice node map: replace target in place
    rebuilt: dict[str, object] = {}
    for nid, node in nodes.items():
        if nid == target:
            rebuilt.update(new_nodes)
        else:
            rebuilt[nid] = node
    nodes.clear()
    nodes.update(rebuilt)

    # rewrite edges: retarget incoming, re-source outgoing per last exit
    rebuilt_edges: list[Edge] = []
    for e in edges:
        if e.target == target:
            e = replace(e, target=chain_entry)
        if e.source == target:
            for x in last_exits:
                rebuilt_edges.append(replace(e, id=f"{x}.{e.id}", source=x))
            continue
        rebuilt_edges.append(e)
    rebuilt_edges.extend(new_edges)
    edges.clear()
    edges.extend(rebuilt_edges)
    return chain_entry


# ---------------------------------------------------------------------------
# Gamification pack selection


def attach_gamification(
    refined: LearningFragment, packs
) -> tuple[LearningFragment, list[RulePack]]:
    """Select every pack whose applies_to kinds intersect the fragment's
    kind histogram; the fragment graph itself is unchanged."""
    if refined.abstract_nodes():
        raise ResultInvalid("gamification attaches to refined fragments only")
    kinds = set(refined.kind_histogram())
    selected = [
        pack for pack in sorted(packs, key=lambda p: p.id) if pack.applies_to & kinds
    ]
    return refined, selected
