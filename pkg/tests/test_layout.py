import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spanroute.layout import (DataLayout, PlacementConfig, PlacementError,
                              UnknownMachineError, generate_placement,
                              invert_layout, load_placement, save_placement,
                              validate_cover)
from util import layout_from, random_layout


def test_each_item_replicated_three_times():
    layout = generate_placement(PlacementConfig(100_000, 50, 3, seed=1))
    assert all(len(homes) == 3 == len(set(homes)) for homes in layout.item_index.values())
    assert sum(len(m) for m in layout.machines) == 3 * 100_000


def test_single_machine_holds_everything():
    layout = generate_placement(PlacementConfig(10, 1, 1, seed=0))
    assert layout.machines[0] == frozenset(range(10))


def test_full_replication_puts_all_items_everywhere():
    layout = generate_placement(PlacementConfig(9, 3, 3, seed=0))
    assert all(m == frozenset(range(9)) for m in layout.machines)


def test_replication_above_machine_count_rejected():
    with pytest.raises(PlacementError):
        generate_placement(PlacementConfig(10, 2, 3, seed=0))


def test_same_seed_same_layout():
    a = generate_placement(PlacementConfig(500, 10, 2, seed=42))
    b = generate_placement(PlacementConfig(500, 10, 2, seed=42))
    assert a.machines == b.machines and a.item_index == b.item_index


def test_invert_layout_definitional():
    assert invert_layout({0: {1, 2}, 1: {2}}) == {1: (0,), 2: (0, 1)}
    assert invert_layout({}) == {}


def test_invert_round_trip():
    rng = random.Random(7)
    layout = random_layout(rng, 200, 8, replication=3)
    index = invert_layout(layout.machines)
    # oracle: rebuild the forward map from the inverse and compare
    rebuilt = [set() for _ in range(8)]
    for item, homes in index.items():
        for m in homes:
            rebuilt[m].add(item)
    assert tuple(frozenset(s) for s in rebuilt) == layout.machines


def test_validate_cover_trivial_cases():
    layout = layout_from([{0, 1, 2}, {2, 3}])
    assert validate_cover({0, 1}, {0, 1, 2, 3}, layout)
    assert not validate_cover(set(), {0}, layout)
    assert validate_cover(set(), set(), layout)


def test_validate_cover_unknown_machine():
    layout = layout_from([{0}])
    with pytest.raises(UnknownMachineError):
        validate_cover({5}, {0}, layout)


def test_validate_cover_matches_membership_scan():
    rng = random.Random(3)
    layout = random_layout(rng, 60, 6, replication=2)
    for _ in range(50):
        cover = set(rng.sample(range(6), rng.randint(0, 6)))
        target = set(rng.sample(range(60), rng.randint(1, 12)))
        united = set().union(*(layout.machines[m] for m in cover)) if cover else set()
        assert validate_cover(cover, target, layout) == (target <= united)


@given(st.integers(1, 200), st.integers(1, 12), st.integers(0, 2 ** 32 - 1), st.data())
def test_layout_mass_invariant(universe, machines, seed, data):
    replication = data.draw(st.integers(1, machines))
    layout = generate_placement(PlacementConfig(universe, machines, replication, seed))
    assert sum(len(m) for m in layout.machines) == replication * universe
    assert invert_layout(layout.machines) == layout.item_index


def test_placement_file_round_trip(tmp_path):
    layout = generate_placement(PlacementConfig(300, 7, 2, seed=9))
    path = tmp_path / "p.txt"
    save_placement(layout, path)
    text = path.read_text()
    assert text.startswith("#placement v1 universe=300 machines=7 replication=2 seed=9\n")
    loaded = load_placement(path)
    assert loaded.machines == layout.machines
    assert loaded.item_index == layout.item_index
    assert (loaded.universe_size, loaded.replication, loaded.seed) == (300, 2, 9)


def test_placement_loader_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("no header\n0\t1 2\n")
    with pytest.raises(PlacementError):
        load_placement(bad)
    sparse = tmp_path / "sparse.txt"
    sparse.write_text("#placement v1 universe=4 machines=2 replication=2 seed=0\n0\t0 1\n1\t0\n")
    with pytest.raises(PlacementError):
        load_placement(sparse)
