import numpy as np
import pytest

from probembed.rng import SeededRng, as_generator


def test_same_seed_same_stream():
    a = SeededRng(7).generator.standard_normal(16)
    b = SeededRng(7).generator.standard_normal(16)
    assert np.array_equal(a, b)


def test_different_seeds_differ():
    a = SeededRng(1).generator.standard_normal(16)
    b = SeededRng(2).generator.standard_normal(16)
    assert not np.array_equal(a, b)


def test_spawn_children_are_independent_and_reproducible():
    first = [c.generator.standard_normal(8) for c in SeededRng(5).spawn(3)]
    second = [c.generator.standard_normal(8) for c in SeededRng(5).spawn(3)]
    for a, b in zip(first, second):
        assert np.array_equal(a, b)
    assert not np.array_equal(first[0], first[1])


def test_as_generator_accepts_all_forms():
    from_int = as_generator(3).standard_normal(4)
    from_seeded = as_generator(SeededRng(3)).standard_normal(4)
    assert np.array_equal(from_int, from_seeded)
    gen = np.random.default_rng(0)
    assert as_generator(gen) is gen


def test_as_generator_rejects_junk():
    with pytest.raises((TypeError, ValueError)):
        as_generator("not a seed")
