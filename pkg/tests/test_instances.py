import warnings

import numpy as np
import pytest

from brkga import KnapsackInstance, TspInstance
from brkga.errors import ParseError
from brkga.instances import (InstanceWarning, format_instance, parse_instance,
                             parse_instance_text, random_knapsack, random_tsp, write_instance)


def test_four_line_tsp_file():
    inst = parse_instance_text("3\n0 0\n0 1\n1 0\n")
    assert isinstance(inst, TspInstance) and len(inst) == 3


def test_comments_and_blank_lines_ignored():
    inst = parse_instance_text("# cities\n3\n\n0 0  # origin\n0 1\n1 0\n")
    assert inst.cities.tolist() == [[0, 0], [0, 1], [1, 0]]


def test_knapsack_file():
    inst = parse_instance_text("2 10\n3 4\n5 6\n")
    assert isinstance(inst, KnapsackInstance)
    assert inst.capacity == 10 and inst.weights.tolist() == [3, 5]


def test_heavy_item_warns_and_is_unusable():
    with pytest.warns(InstanceWarning, match=":3:"):
        inst = parse_instance_text("2 10\n3 4\n50 6\n")
    assert inst.unusable.tolist() == [False, True]


@pytest.mark.parametrize("text,line", [
    ("3\n0 0\n0 x\n1 0\n", 3),
    ("3\n0 0\n0 1 2\n1 0\n", 3),
    ("3\n0 0\n0 1\n", 3),
    ("2\n0 0\n1 1\n", 1),
    ("2 10\n3 4\n-1 6\n", 3),
    ("2 0\n3 4\n1 6\n", 1),
    ("a\n", 1),
    ("3\n0 0\n0 1\n1 0\n5 5\n", 5),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_instance_text(text, "inst.txt")
    assert info.value.line == line
    assert f"inst.txt:{line}:" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        parse_instance(tmp_path / "nope.txt")


@pytest.mark.parametrize("make", [lambda s: random_tsp(25, s), lambda s: random_knapsack(25, s)])
def test_write_then_parse_round_trip(tmp_path, make):
    for seed in range(5):
        inst = make(seed)
        path = tmp_path / f"i{seed}.txt"
        write_instance(inst, path)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert parse_instance(path) == inst
        assert format_instance(parse_instance(path)) == path.read_text()


def test_random_instances_are_seeded():
    assert random_tsp(10, 3) == random_tsp(10, 3)
    assert random_tsp(10, 3) != random_tsp(10, 4)
    k = random_knapsack(12, 1)
    assert k.capacity == np.floor(k.weights.sum() / 2)
