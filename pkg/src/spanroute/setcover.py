"""Set cover kernels over a machine layout.

The greedy selection keeps machines bucketed by their current
uncovered-intersection size, so each (item, machine) incidence is touched at
most once and the cursor over bucket sizes only ever moves down between
refills. Ties go to the lowest machine id unless a context query biases them.
"""

from __future__ import annotations

import itertools
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Literal

from .layout import Cover, DataLayout

NestedStrategy = Literal["q2-only", "greedy-first", "biased-first"]

BRUTE_FORCE_LIMIT = 22


class UncoverableItemError(ValueError):
    def __init__(self, item: int):
        super().__init__(f"item {item} is on no machine")
        self.item = item


@dataclass
class WorkCounter:
    """Instrumentation shared by the cover kernels.

    `touched` counts item-level bucket updates during selection, `blank_steps`
    counts empty-bucket cursor moves, `picks` records chosen machines in order.
    """

    touched: int = 0
    blank_steps: int = 0
    picks: list[int] = field(default_factory=list)
    items_processed: int = 0


@dataclass
class PairCoverResult:
    cover_q1: Cover
    cover_q2: Cover
    machines_touched_total: int


class SizeBucketIndex:
    """Machines bucketed by how much of the still-uncovered target they hold.

    Single use: built for one target set and consumed by one cover run. When a
    context item set is supplied, machines within a bucket are ranked by their
    overlap with the context (then by lowest id).
    """

    def __init__(self, target: set[int], layout: DataLayout,
                 context: Iterable[int] | None = None,
                 counter: WorkCounter | None = None):
        index = layout.item_index
        sizes: dict[int, int] = {}
        for item in target:
            homes = index.get(item, ())
            if not homes:
                raise UncoverableItemError(item)
            for m in homes:
                sizes[m] = sizes.get(m, 0) + 1
        secondary: dict[int, int] | None = None
        if context is not None:
            secondary = {}
            for item in context:
                for m in index.get(item, ()):
                    if m in sizes:
                        secondary[m] = secondary.get(m, 0) + 1
        buckets: dict[int, set[int]] = defaultdict(set)
        for m, s in sizes.items():
            buckets[s].add(m)
        self._sizes = sizes
        self._buckets = buckets
        self._secondary = secondary
        self._cursor = max(buckets) if buckets else 0
        self._counter = counter

    def pop_best(self, tie_rng: random.Random | None = None) -> int | None:
        """Remove and return a machine of maximal uncovered-intersection size."""
        buckets = self._buckets
        while self._cursor > 0 and not buckets.get(self._cursor):
            self._cursor -= 1
            if self._counter is not None:
                self._counter.blank_steps += 1
        if self._cursor <= 0:
            return None
        bucket = buckets[self._cursor]
        secondary = self._secondary
        if tie_rng is not None:
            if secondary is None:
                m = tie_rng.choice(sorted(bucket))
            else:
                best = max(secondary.get(x, 0) for x in bucket)
                m = tie_rng.choice(sorted(x for x in bucket if secondary.get(x, 0) == best))
        elif secondary is None:
            m = min(bucket)
        else:
            m = min(bucket, key=lambda x: (-secondary.get(x, 0), x))
        bucket.discard(m)
        del self._sizes[m]
        return m

    def credit(self, newly_covered: Iterable[int], layout: DataLayout) -> None:
        """Move machines down a bucket for each newly covered item they hold."""
        sizes = self._sizes
        buckets = self._buckets
        index = layout.item_index
        counter = self._counter
        for item in newly_covered:
            for m in index[item]:
                s = sizes.get(m)
                if s is None:
                    continue
                buckets[s].discard(m)
                sizes[m] = s - 1
                buckets[s - 1].add(m)
                if counter is not None:
                    counter.touched += 1


_SMALL_TARGET = 3


def _greedy_small(uncovered: set[int], layout: DataLayout) -> tuple[int, ...]:
    """Bucket-free greedy for small targets; same picks and tie-breaks."""
    index = layout.item_index
    candidates: set[int] = set()
    for item in uncovered:
        homes = index.get(item, ())
        if not homes:
            raise UncoverableItemError(item)
        candidates.update(homes)
    machine_sets = layout.machines
    ordered = sorted(candidates)
    chosen: list[int] = []
    while uncovered:
        best = -1
        best_n = 0
        for m in ordered:
            held = machine_sets[m]
            n = 0
            for item in uncovered:
                if item in held:
                    n += 1
            if n > best_n:
                best, best_n = m, n
        chosen.append(best)
        held = machine_sets[best]
        uncovered = {item for item in uncovered if item not in held}
    return tuple(chosen)


def _run_cover(target: Iterable[int], layout: DataLayout,
               context: Iterable[int] | None,
               tie_rng: random.Random | None,
               counter: WorkCounter | None) -> tuple[int, ...]:
    uncovered = set(target)
    if not uncovered:
        return ()
    if (context is None and tie_rng is None and counter is None
            and len(uncovered) <= _SMALL_TARGET):
        return _greedy_small(uncovered, layout)
    index = SizeBucketIndex(uncovered, layout, context, counter)
    chosen: list[int] = []
    while uncovered:
        m = index.pop_best(tie_rng)
        assert m is not None  # an uncovered item keeps its machines in a bucket >= 1
        chosen.append(m)
        if counter is not None:
            counter.picks.append(m)
        newly = layout.machines[m] & uncovered
        uncovered -= newly
        index.credit(newly, layout)
    return tuple(chosen)


def greedy_cover_seq(target: Iterable[int], layout: DataLayout, *,
                     tie_rng: random.Random | None = None,
                     counter: WorkCounter | None = None) -> tuple[int, ...]:
    """Like `greedy_cover` but returns the machines in pick order."""
    return _run_cover(target, layout, None, tie_rng, counter)


def greedy_cover(target: Iterable[int], layout: DataLayout, *,
                 tie_rng: random.Random | None = None,
                 counter: WorkCounter | None = None) -> Cover:
    """Cover the target by repeatedly taking a machine of maximal uncovered overlap.

    Ties break to the lowest machine id; pass `tie_rng` for the seeded-random
    tie-break mode instead.
    """
    return frozenset(_run_cover(target, layout, None, tie_rng, counter))


def biased_greedy_cover_seq(target: Iterable[int], context: Iterable[int],
                            layout: DataLayout, *,
                            tie_rng: random.Random | None = None,
                            counter: WorkCounter | None = None) -> tuple[int, ...]:
    """Like `biased_greedy_cover` but returns the machines in pick order."""
    exclusive = set(context) - set(target)
    return _run_cover(target, layout, exclusive, tie_rng, counter)


def biased_greedy_cover(target: Iterable[int], context: Iterable[int], layout: DataLayout, *,
                        tie_rng: random.Random | None = None,
                        counter: WorkCounter | None = None) -> Cover:
    """Greedy cover of `target` whose ties prefer machines covering more of `context`.

    Step sizes are identical to `greedy_cover`; only tie-breaking differs, using
    each machine's overlap with the context items outside the target.
    """
    return frozenset(biased_greedy_cover_seq(target, context, layout,
                                             tie_rng=tie_rng, counter=counter))


def covered_items(cover: Iterable[int], items: Iterable[int], layout: DataLayout) -> set[int]:
    """Subset of `items` held by at least one machine of the cover."""
    chosen = set(cover)
    index = layout.item_index
    return {i for i in items if any(m in chosen for m in index.get(i, ()))}


def cover_nested(q1: Iterable[int], q2: Iterable[int], layout: DataLayout,
                 strategy: NestedStrategy = "biased-first",
                 counter: WorkCounter | None = None) -> PairCoverResult:
    """Cover a nested query pair q1 within q2 with one of three strategies.

    `q2-only` covers the outer query once and reuses it for both. The other two
    cover q1 first (plain greedy, or greedy biased toward q2) and then cover
    whatever of q2 the first stage left uncovered.
    """
    q1s, q2s = set(q1), set(q2)
    if not q1s <= q2s:
        raise ValueError("q1 must be a subset of q2")
    if strategy == "q2-only":
        c2 = greedy_cover(q2s, layout, counter=counter)
        return PairCoverResult(c2, c2, len(c2))
    if strategy == "greedy-first":
        c1 = greedy_cover(q1s, layout, counter=counter)
    elif strategy == "biased-first":
        c1 = biased_greedy_cover(q1s, q2s, layout, counter=counter)
    else:
        raise ValueError(f"unknown nested strategy {strategy!r}")
    rest = q2s - covered_items(c1, q2s, layout)
    c2 = c1 | greedy_cover(rest, layout, counter=counter)
    return PairCoverResult(c1, c2, len(c2))


def cover_intersecting(q1: Iterable[int], q2: Iterable[int], layout: DataLayout,
                       counter: WorkCounter | None = None) -> PairCoverResult:
    """Cover two overlapping queries without processing any item twice.

    The shared items are covered first, biased toward the union; each query's
    residue is then covered separately and unioned with the shared cover.
    """
    q1s, q2s = set(q1), set(q2)
    common = q1s & q2s
    union = q1s | q2s
    c_common: Cover = frozenset()
    if common:
        c_common = biased_greedy_cover(common, union, layout, counter=counter)
    done = covered_items(c_common, union, layout)
    rest1 = q1s - done
    rest2 = q2s - done
    cover1 = c_common | greedy_cover(rest1, layout, counter=counter)
    cover2 = c_common | greedy_cover(rest2, layout, counter=counter)
    if counter is not None:
        counter.items_processed += len(common) + len(rest1) + len(rest2)
    return PairCoverResult(cover1, cover2, len(cover1 | cover2))


def brute_force_cover(target: Iterable[int], layout: DataLayout,
                      max_candidates: int = BRUTE_FORCE_LIMIT) -> Cover:
    """Exact minimum-cardinality cover by subset enumeration.

    Guards against exponential blowup by refusing more than `max_candidates`
    candidate machines. Among equal-size minima the lexicographically least
    machine id tuple wins.
    """
    targets = sorted(set(target))
    if not targets:
        return frozenset()
    index = layout.item_index
    cand_set: set[int] = set()
    for item in targets:
        homes = index.get(item, ())
        if not homes:
            raise UncoverableItemError(item)
        cand_set.update(homes)
    cands = sorted(cand_set)
    if len(cands) > max_candidates:
        raise ValueError(
            f"{len(cands)} candidate machines exceed the brute-force limit of {max_candidates}"
        )
    bit = {item: 1 << i for i, item in enumerate(targets)}
    full = (1 << len(targets)) - 1
    masks = []
    for m in cands:
        mask = 0
        holder = layout.machines[m]
        for item in targets:
            if item in holder:
                mask |= bit[item]
        masks.append(mask)
    for k in range(1, len(cands) + 1):
        for combo in itertools.combinations(range(len(cands)), k):
            acc = 0
            for ci in combo:
                acc |= masks[ci]
            if acc == full:
                # combinations over ascending ids arrive in lexicographic order
                return frozenset(cands[ci] for ci in combo)
    raise UncoverableItemError(targets[0])
