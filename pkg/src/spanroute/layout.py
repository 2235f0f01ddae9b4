"""Universe, machines, and the replicated random data placement."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

Cover = frozenset[int]

PLACEMENT_MAGIC = "#placement v1"


class PlacementError(ValueError):
    """Invalid placement configuration or placement file."""


class UnknownMachineError(KeyError):
    """A cover references a machine id outside the layout."""


@dataclass(frozen=True)
class PlacementConfig:
    universe_size: int
    machine_count: int
    replication: int = 3
    seed: int = 0

    def validate(self) -> None:
        if self.universe_size < 1:
            raise PlacementError("universe_size must be >= 1")
        if self.machine_count < 1:
            raise PlacementError("machine_count must be >= 1")
        if self.replication < 1:
            raise PlacementError("replication must be >= 1")
        if self.replication > self.machine_count:
            raise PlacementError(
                f"replication {self.replication} exceeds machine_count {self.machine_count}"
            )


@dataclass(frozen=True)
class Query:
    id: int
    items: frozenset[int]

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class DataLayout:
    """Replicated placement: machine item sets plus the inverted item index.

    Machine ids are dense 0..machine_count-1 (list positions). The layout is
    immutable after construction and safe to share across workers.
    """

    machines: tuple[frozenset[int], ...]
    item_index: dict[int, tuple[int, ...]]
    universe_size: int
    replication: int | None = None
    seed: int | None = None

    @property
    def machine_count(self) -> int:
        return len(self.machines)

    @classmethod
    def from_machines(cls, machines, universe_size=None, replication=None, seed=None):
        """Build a layout from raw machine item sets (ids are positions)."""
        frozen = tuple(frozenset(m) for m in machines)
        index = invert_layout(frozen)
        if universe_size is None:
            universe_size = max(index, default=-1) + 1
        return cls(frozen, index, universe_size, replication, seed)


def generate_placement(config: PlacementConfig) -> DataLayout:
    """Assign every item to `replication` machines drawn uniformly at random.

    The draw is a seeded partial shuffle per item, so identical seeds yield
    identical layouts.
    """
    config.validate()
    rng = random.Random(config.seed)
    machine_ids = range(config.machine_count)
    machines: list[set[int]] = [set() for _ in machine_ids]
    item_index: dict[int, tuple[int, ...]] = {}
    for item in range(config.universe_size):
        homes = sorted(rng.sample(machine_ids, config.replication))
        for m in homes:
            machines[m].add(item)
        item_index[item] = tuple(homes)
    return DataLayout(
        machines=tuple(frozenset(m) for m in machines),
        item_index=item_index,
        universe_size=config.universe_size,
        replication=config.replication,
        seed=config.seed,
    )


def invert_layout(machines) -> dict[int, tuple[int, ...]]:
    """Invert machine -> items into item -> sorted machine ids.

    Accepts either a mapping of machine id to items or a sequence indexed by
    machine id. Round-tripping with the forward map is lossless.
    """
    if isinstance(machines, Mapping):
        pairs = machines.items()
    else:
        pairs = enumerate(machines)
    index: dict[int, list[int]] = {}
    for mid, items in pairs:
        for item in items:
            index.setdefault(item, []).append(mid)
    return {item: tuple(sorted(ms)) for item, ms in sorted(index.items())}


def validate_cover(cover: Iterable[int], target_items: Iterable[int], layout: DataLayout) -> bool:
    """True iff every target item lies on at least one machine of the cover."""
    chosen = set(cover)
    for m in chosen:
        if not 0 <= m < layout.machine_count:
            raise UnknownMachineError(m)
    index = layout.item_index
    for item in target_items:
        homes = index.get(item, ())
        if not any(m in chosen for m in homes):
            return False
    return True


def save_placement(layout: DataLayout, path) -> None:
    """Write the placement file: header plus one `id<TAB>items` line per machine."""
    replication = layout.replication if layout.replication is not None else 0
    seed = layout.seed if layout.seed is not None else 0
    lines = [
        f"{PLACEMENT_MAGIC} universe={layout.universe_size} "
        f"machines={layout.machine_count} replication={replication} seed={seed}"
    ]
    for mid, items in enumerate(layout.machines):
        lines.append(f"{mid}\t" + " ".join(str(i) for i in sorted(items)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_placement(path) -> DataLayout:
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(PLACEMENT_MAGIC):
        raise PlacementError(f"{path}: missing '{PLACEMENT_MAGIC}' header")
    try:
        fields = dict(part.split("=", 1) for part in lines[0].split()[2:])
        universe = int(fields["universe"])
        count = int(fields["machines"])
        replication = int(fields["replication"])
        seed = int(fields["seed"])
    except (KeyError, ValueError) as exc:
        raise PlacementError(f"{path}: malformed header: {lines[0]!r}") from exc
    machines: list[frozenset[int]] = []
    for expected, line in enumerate(lines[1:]):
        mid_s, _, items_s = line.partition("\t")
        try:
            mid = int(mid_s)
            items = frozenset(int(tok) for tok in items_s.split())
        except ValueError as exc:
            raise PlacementError(f"{path}: malformed machine line {expected + 2}") from exc
        if mid != expected:
            raise PlacementError(f"{path}: machine ids must be dense, got {mid} at position {expected}")
        bad = [i for i in items if i < 0 or i >= universe]
        if bad:
            raise PlacementError(f"{path}: machine {mid} holds item {bad[0]} outside universe {universe}")
        machines.append(items)
    if len(machines) != count:
        raise PlacementError(f"{path}: header says {count} machines, found {len(machines)}")
    layout = DataLayout(
        machines=tuple(machines),
        item_index=invert_layout(machines),
        universe_size=universe,
        replication=replication or None,
        seed=seed,
    )
    if replication:
        if len(layout.item_index) != universe:
            raise PlacementError(f"{path}: {universe - len(layout.item_index)} items are on no machine")
        for item, homes in layout.item_index.items():
            if len(homes) != replication:
                raise PlacementError(f"{path}: item {item} is on {len(homes)} machines, expected {replication}")
    return layout
