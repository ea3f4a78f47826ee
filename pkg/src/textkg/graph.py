"""Knowledge-graph data model, TSV ingestion, inductive split generation
and filtered candidate construction for ranking evaluation."""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ContractError, GraphParseError, MissingDescriptionError

Triple = tuple[int, int, int]

DYNAMIC = "dynamic"
TRANSFER = "transfer"
SCENARIOS = (DYNAMIC, TRANSFER)

# min_rel_count auto-scaling anchors: a large reference graph keeps the full
# per-relation floor of 100 edges; smaller graphs scale it down, never below 1.
_REL_FLOOR = 100
_REL_FLOOR_REF_TRIPLES = 215082


@dataclass
class KnowledgeGraph:
    """Entities, relation types, triples and one description per entity.

    Index order is first appearance in the triples file; instances are
    treated as immutable after construction.
    """

    entities: tuple[str, ...]
    relations: tuple[str, ...]
    triples: tuple[Triple, ...]
    descriptions: tuple[str, ...]
    entity_index: dict = field(repr=False, compare=False, default=None)
    relation_index: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        self.entity_index = {e: i for i, e in enumerate(self.entities)}
        self.relation_index = {r: i for i, r in enumerate(self.relations)}
        if len(self.descriptions) != len(self.entities):
            raise ContractError("one description required per entity")
        for h, r, t in self.triples:
            if not (0 <= h < len(self.entities) and 0 <= t < len(self.entities)):
                raise ContractError(f"triple ({h},{r},{t}) has invalid entity index")
            if not 0 <= r < len(self.relations):
                raise ContractError(f"triple ({h},{r},{t}) has invalid relation index")

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)


def _parse_triple_lines(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise GraphParseError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
                )
            rows.append(parts)
    return rows


def load_descriptions(path) -> dict[str, str]:
    """``entity<TAB>text`` lines; text may be empty but the tab is required."""
    desc: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise GraphParseError(
                    f"{path}:{lineno}: expected 2 tab-separated fields, got {len(parts)}"
                )
            name, text = parts
            if name in desc:
                raise GraphParseError(
                    f"{path}:{lineno}: duplicate description for entity {name!r}"
                )
            desc[name] = text
    return desc


def load_graph(triples_path, descriptions_path) -> KnowledgeGraph:
    """Load a graph from a triples TSV and a descriptions TSV.

    Entities and relations are indexed in first-appearance order; duplicate
    triples are stored once. Entities that appear only in the descriptions
    file are ignored with a warning.
    """
    entities: list[str] = []
    ent_idx: dict[str, int] = {}
    relations: list[str] = []
    rel_idx: dict[str, int] = {}
    triples: list[Triple] = []
    seen: set[Triple] = set()

    for head, rel, tail in _parse_triple_lines(triples_path):
        for name in (head, tail):
            if name not in ent_idx:
                ent_idx[name] = len(entities)
                entities.append(name)
        if rel not in rel_idx:
            rel_idx[rel] = len(relations)
            relations.append(rel)
        t = (ent_idx[head], rel_idx[rel], ent_idx[tail])
        if t not in seen:
            seen.add(t)
            triples.append(t)

    desc_map = load_descriptions(descriptions_path)
    missing = [e for e in entities if e not in desc_map]
    if missing:
        raise MissingDescriptionError(missing)
    extra = [e for e in desc_map if e not in ent_idx]
    if extra:
        warnings.warn(
            f"{len(extra)} description(s) for entities absent from the triples "
            "file were ignored"
        )
    empty = [e for e in entities if not desc_map[e].strip()]
    if empty:
        warnings.warn(f"{len(empty)} entit(ies) have an empty description")

    return KnowledgeGraph(
        entities=tuple(entities),
        relations=tuple(relations),
        triples=tuple(triples),
        descriptions=tuple(desc_map[e] for e in entities),
    )


def save_graph(graph: KnowledgeGraph, triples_path, descriptions_path) -> None:
    with open(triples_path, "w", encoding="utf-8") as fh:
        for h, r, t in graph.triples:
            fh.write(f"{graph.entities[h]}\t{graph.relations[r]}\t{graph.entities[t]}\n")
    with open(descriptions_path, "w", encoding="utf-8") as fh:
        for name, text in zip(graph.entities, graph.descriptions):
            fh.write(f"{name}\t{text}\n")


# ---------------------------------------------------------------------------
# inductive splits


@dataclass
class SplitSpec:
    """Entity and triple assignment for one inductive evaluation setup."""

    scenario: str
    train_entities: tuple[int, ...]
    valid_entities: tuple[int, ...]
    test_entities: tuple[int, ...]
    train_triples: tuple[Triple, ...]
    valid_triples: tuple[Triple, ...]
    test_triples: tuple[Triple, ...]
    seed: int = 0
    test_frac: float = 0.0
    valid_frac: float = 0.0
    warning: str | None = None
    dropped_triples: int = 0

    def entities_of(self, split: str) -> tuple[int, ...]:
        return {"train": self.train_entities,
                "valid": self.valid_entities,
                "test": self.test_entities}[split]

    def triples_of(self, split: str) -> tuple[Triple, ...]:
        return {"train": self.train_triples,
                "valid": self.valid_triples,
                "test": self.test_triples}[split]


def auto_min_rel_count(n_triples: int) -> int:
    scaled = _REL_FLOOR * n_triples // _REL_FLOOR_REF_TRIPLES
    return max(1, min(_REL_FLOOR, scaled))


def generate_inductive_splits(
    graph: KnowledgeGraph,
    test_frac: float = 0.1,
    valid_frac: float = 0.1,
    min_rel_count: int | None = None,
    seed: int = 0,
    scenario: str = DYNAMIC,
) -> SplitSpec:
    """Hold out entities by rejection sampling.

    A sampled entity is removed only if (a) no remaining entity is left
    without neighbors and (b) every relation type keeps at least
    ``min_rel_count`` remaining edges. Removed entities fill the test set
    first, then the validation set. Incident edges move to the split of the
    first-removed endpoint; under ``transfer`` the held-out triple lists are
    instead restricted to pairs inside one held-out set, and crossing triples
    are dropped. Deterministic for a fixed seed.
    """
    if scenario not in SCENARIOS:
        raise ContractError(f"unknown scenario {scenario!r}")
    if graph.n_entities == 0:
        raise ContractError("cannot split an empty graph")
    if test_frac < 0 or valid_frac < 0 or test_frac + valid_frac >= 1:
        raise ContractError("need test_frac + valid_frac < 1 and both >= 0")
    if min_rel_count is None:
        min_rel_count = auto_min_rel_count(len(graph.triples))
    if min_rel_count < 1:
        raise ContractError("min_rel_count must be positive")

    n = graph.n_entities
    targets = [("test", int(test_frac * n)), ("valid", int(valid_frac * n))]

    # Remaining-graph bookkeeping. Neighbors are undirected over any relation.
    adj: dict[int, set[int]] = {e: set() for e in range(n)}
    incident: dict[int, set[int]] = {e: set() for e in range(n)}
    rel_count = [0] * graph.n_relations
    alive_triple = [True] * len(graph.triples)
    for ti, (h, r, t) in enumerate(graph.triples):
        adj[h].add(t)
        adj[t].add(h)
        incident[h].add(ti)
        incident[t].add(ti)
        rel_count[r] += 1

    rng = random.Random(seed)
    remaining = sorted(adj)
    removed = {"test": [], "valid": []}
    moved = {"test": [], "valid": []}
    attempts = 0
    max_attempts = 10 * n

    for split_name, want in targets:
        while len(removed[split_name]) < want and attempts < max_attempts:
            attempts += 1
            v = remaining[rng.randrange(len(remaining))]
            # (a) removal must not isolate any other remaining entity
            isolates = any(adj[u] == {v} for u in adj[v] if u != v)
            if isolates:
                continue
            # (b) every relation keeps at least min_rel_count edges
            loss_per_rel: dict[int, int] = {}
            for ti in incident[v]:
                r = graph.triples[ti][1]
                loss_per_rel[r] = loss_per_rel.get(r, 0) + 1
            if any(rel_count[r] - c < min_rel_count for r, c in loss_per_rel.items()):
                continue
            # accept: move v's remaining edges to this split
            for ti in sorted(incident[v]):
                h, r, t = graph.triples[ti]
                moved[split_name].append((h, r, t))
                rel_count[r] -= 1
                alive_triple[ti] = False
                other = t if h == v else h
                if other != v:
                    incident[other].discard(ti)
            for u in adj[v]:
                if u != v:
                    adj[u].discard(v)
            del adj[v], incident[v]
            remaining.remove(v)
            removed[split_name].append(v)

    warning = None
    achieved_test = len(removed["test"]) / n
    achieved_valid = len(removed["valid"]) / n
    if len(removed["test"]) < targets[0][1] or len(removed["valid"]) < targets[1][1]:
        warning = (
            f"target fractions unreachable: achieved test={achieved_test:.4f} "
            f"valid={achieved_valid:.4f} after {attempts} attempts"
        )

    train_entities = tuple(remaining)
    train_triples = tuple(t for ti, t in enumerate(graph.triples) if alive_triple[ti])
    dropped = 0

    if scenario == DYNAMIC:
        valid_triples = tuple(moved["valid"])
        test_triples = tuple(moved["test"])
    else:
        test_set = set(removed["test"])
        valid_set = set(removed["valid"])
        test_triples = tuple(t for t in graph.triples
                             if t[0] in test_set and t[2] in test_set)
        valid_triples = tuple(t for t in graph.triples
                              if t[0] in valid_set and t[2] in valid_set)
        dropped = (len(graph.triples) - len(train_triples)
                   - len(test_triples) - len(valid_triples))

    return SplitSpec(
        scenario=scenario,
        train_entities=train_entities,
        valid_entities=tuple(removed["valid"]),
        test_entities=tuple(removed["test"]),
        train_triples=train_triples,
        valid_triples=valid_triples,
        test_triples=test_triples,
        seed=seed,
        test_frac=test_frac,
        valid_frac=valid_frac,
        warning=warning,
        dropped_triples=dropped,
    )


# ---------------------------------------------------------------------------
# filtered candidates

HEAD = "head"
TAIL = "tail"


@dataclass
class CandidateSet:
    """Incorrect-candidate pool for one (triple, position) ranking trial."""

    triple: Triple
    position: str
    candidates: tuple[int, ...]


def _split_of_triple(splits: SplitSpec, triple: Triple) -> str:
    if triple in splits.test_triples:
        return "test"
    if triple in splits.valid_triples:
        return "valid"
    if triple in splits.train_triples:
        return "train"
    raise ContractError(f"triple {triple} belongs to no split")


def filtered_candidates(
    splits: SplitSpec,
    graph: KnowledgeGraph,
    triple: Triple,
    position: str,
    scenario: str | None = None,
) -> CandidateSet:
    """Candidate entities for replacing ``position`` of ``triple``.

    Pool is train+eval entities under ``dynamic`` and eval entities only
    under ``transfer``; entities that would re-create any known-true triple
    are filtered out, as is the correct entity itself.
    """
    if position not in (HEAD, TAIL):
        raise ContractError(f"position must be 'head' or 'tail', got {position!r}")
    scenario = scenario or splits.scenario
    if scenario not in SCENARIOS:
        raise ContractError(f"unknown scenario {scenario!r}")
    eval_split = _split_of_triple(splits, triple)

    h, r, t = triple
    train_set = set(splits.train_entities)
    if scenario == TRANSFER and eval_split != "train":
        if h in train_set or t in train_set:
            raise ContractError(
                f"transfer-scenario triple {triple} touches a training entity"
            )
        pool = list(splits.entities_of(eval_split))
    else:
        eval_entities = splits.entities_of(eval_split)
        pool = list(splits.train_entities)
        pool.extend(e for e in eval_entities if e not in train_set)

    known = set(graph.triples)
    correct = h if position == HEAD else t
    out = []
    for e in pool:
        if e == correct:
            continue
        candidate_triple = (e, r, t) if position == HEAD else (h, r, e)
        if candidate_triple in known:
            continue
        out.append(e)
    return CandidateSet(triple=triple, position=position, candidates=tuple(out))


# ---------------------------------------------------------------------------
# split persistence: three triples TSVs plus a key=value manifest


def _write_triples(graph: KnowledgeGraph, triples, path):
    with open(path, "w", encoding="utf-8") as fh:
        for h, r, t in triples:
            fh.write(f"{graph.entities[h]}\t{graph.relations[r]}\t{graph.entities[t]}\n")


def save_splits(splits: SplitSpec, graph: KnowledgeGraph, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_triples(graph, splits.train_triples, out / "train.tsv")
    _write_triples(graph, splits.valid_triples, out / "valid.tsv")
    _write_triples(graph, splits.test_triples, out / "test.tsv")
    lines = [
        f"scenario = {splits.scenario}",
        f"seed = {splits.seed}",
        f"test_frac = {splits.test_frac}",
        f"valid_frac = {splits.valid_frac}",
        f"warning = {splits.warning or ''}",
        f"dropped_triples = {splits.dropped_triples}",
        "valid_entities = " + "\t".join(graph.entities[e] for e in splits.valid_entities),
        "test_entities = " + "\t".join(graph.entities[e] for e in splits.test_entities),
    ]
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_triples(graph: KnowledgeGraph, path) -> tuple[Triple, ...]:
    out = []
    for head, rel, tail in _parse_triple_lines(path):
        try:
            out.append((graph.entity_index[head],
                        graph.relation_index[rel],
                        graph.entity_index[tail]))
        except KeyError as exc:
            raise ContractError(f"{path}: unknown identifier {exc.args[0]!r}") from exc
    return tuple(out)


def load_splits(graph: KnowledgeGraph, in_dir) -> SplitSpec:
    src = Path(in_dir)
    manifest = {}
    for line in (src / "manifest.txt").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(" = ")
        manifest[key] = value

    def ent_list(key):
        raw = manifest.get(key, "")
        names = [x for x in raw.split("\t") if x]
        return tuple(graph.entity_index[x] for x in names)

    valid_entities = ent_list("valid_entities")
    test_entities = ent_list("test_entities")
    held = set(valid_entities) | set(test_entities)
    train_entities = tuple(e for e in range(graph.n_entities) if e not in held)
    return SplitSpec(
        scenario=manifest["scenario"],
        train_entities=train_entities,
        valid_entities=valid_entities,
        test_entities=test_entities,
        train_triples=_read_triples(graph, src / "train.tsv"),
        valid_triples=_read_triples(graph, src / "valid.tsv"),
        test_triples=_read_triples(graph, src / "test.tsv"),
        seed=int(manifest.get("seed", 0)),
        test_frac=float(manifest.get("test_frac", 0.0)),
        valid_frac=float(manifest.get("valid_frac", 0.0)),
        warning=manifest.get("warning") or None,
        dropped_triples=int(manifest.get("dropped_triples", 0)),
    )
