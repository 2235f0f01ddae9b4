"""Shared instance builders for the test suite."""

import random

from spanroute.layout import DataLayout, Query


def layout_from(machine_sets, universe=None) -> DataLayout:
    return DataLayout.from_machines(machine_sets, universe)


def random_layout(rng: random.Random, universe: int, machines: int,
                  replication: int = 2) -> DataLayout:
    """Every item lands on `replication` machines, so instances stay coverable."""
    sets = [set() for _ in range(machines)]
    for item in range(universe):
        for m in rng.sample(range(machines), replication):
            sets[m].add(item)
    return layout_from(sets, universe)


def random_query(rng: random.Random, universe: int, lo: int, hi: int,
                 qid: int = 0) -> Query:
    return Query(qid, frozenset(rng.sample(range(universe), rng.randint(lo, hi))))


def correlated_cluster(rng: random.Random, universe: int, qid0: int,
                       members_lo: int = 2, members_hi: int = 6) -> list[Query]:
    """A handful of queries perturbed around one base item set."""
    base = rng.sample(range(universe), rng.randint(6, 14))
    queries = []
    for i in range(rng.randint(members_lo, members_hi)):
        items = set(base)
        for _ in range(rng.randint(0, 3)):
            if len(items) > 3 and rng.random() < 0.5:
                items.discard(rng.choice(sorted(items)))
            else:
                items.add(rng.randrange(universe))
        queries.append(Query(qid0 + i, frozenset(items)))
    return queries
