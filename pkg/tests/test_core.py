"""Value types: genomes, populations, bit packing, seeded streams."""

import numpy as np
import pytest

from subniche.core import (Genome, Individual, Population, RandomSource,
                           as_generator, hamming_distance, pack_bits,
                           random_genome, unpack_bits)


def test_hamming_distance_counts_differing_positions():
    assert hamming_distance(Genome.from_string("0000"), Genome.from_string("0000")) == 0
    assert hamming_distance(Genome.from_string("0000"), Genome.from_string("1111")) == 4
    assert hamming_distance(Genome.from_string("0101"), Genome.from_string("0011")) == 2


def test_hamming_distance_rejects_length_mismatch():
    with pytest.raises(ValueError):
        hamming_distance(Genome.from_string("01"), Genome.from_string("011"))


def test_hamming_distance_satisfies_triangle_inequality():
    gen = RandomSource(3).generator()
    for _ in range(50):
        a, b, c = (Genome(gen.integers(0, 2, size=12, dtype=np.uint8))
                   for _ in range(3))
        assert hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c)


def test_random_genome_is_reproducible_from_seed():
    assert random_genome(4, RandomSource(11)) == random_genome(4, RandomSource(11))


def test_random_genome_bits_are_unbiased():
    gen = RandomSource(5).generator()
    ones = sum(int(random_genome(1, gen).bits[0]) for _ in range(10_000))
    assert 0.47 <= ones / 10_000 <= 0.53


def test_random_genome_rejects_zero_length():
    with pytest.raises(ValueError):
        random_genome(0, RandomSource(1))


def test_genome_equality_and_hash_follow_the_bit_pattern():
    a = Genome.from_string("0110")
    b = Genome([0, 1, 1, 0])
    c = Genome.from_string("0111")
    assert a == b and hash(a) == hash(b)
    assert a != c
    assert str(a) == "0110"
    assert len(a) == 4


def test_genome_rejects_non_binary_content():
    with pytest.raises(ValueError):
        Genome([0, 2, 1])
    with pytest.raises(ValueError):
        Genome([])


def test_genome_bits_are_read_only():
    g = Genome.from_string("101")
    with pytest.raises(ValueError):
        g.bits[0] = 0


def test_individual_guards_missing_fitness():
    ind = Individual(Genome.from_string("01"))
    assert not ind.evaluated
    with pytest.raises(ValueError):
        ind.require_fitness()
    assert Individual(Genome.from_string("01"), 2.5).require_fitness() == 2.5


def test_population_checks_fitness_vector_length():
    bits = np.zeros((3, 4), dtype=np.uint8)
    with pytest.raises(ValueError):
        Population(bits, np.zeros(2))
    pop = Population(bits, np.arange(3.0))
    assert pop.size == 3 and pop.genome_length == 4
    assert pop.evaluated


def test_population_is_isolated_from_its_source_arrays():
    bits = np.zeros((2, 3), dtype=np.uint8)
    pop = Population(bits)
    bits[0, 0] = 1
    assert pop.bits[0, 0] == 0
    with pytest.raises(ValueError):
        pop.bits[0, 0] = 1


def test_population_from_members_requires_all_or_none_evaluated():
    a = Individual(Genome.from_string("00"), 1.0)
    b = Individual(Genome.from_string("11"))
    with pytest.raises(ValueError):
        Population.from_members([a, b])
    pop = Population.from_members([a, Individual(Genome.from_string("11"), 2.0)])
    assert list(pop.fitness) == [1.0, 2.0]
    assert pop.member(1).genome == Genome.from_string("11")


def test_unevaluated_population_refuses_fitness_access():
    pop = Population(np.zeros((2, 2), dtype=np.uint8))
    assert not pop.evaluated
    with pytest.raises(ValueError):
        pop.fitness


def test_pack_bits_round_trips_past_one_word():
    gen = RandomSource(17).generator()
    for length in (1, 5, 63, 64, 65, 130):
        bits = gen.integers(0, 2, size=(7, length), dtype=np.uint8)
        packed = pack_bits(bits)
        assert packed.shape == (7, (length + 63) // 64)
        assert np.array_equal(unpack_bits(packed, length), bits)


def test_pack_bits_distinguishes_distinct_rows():
    bits = np.array([[1, 0, 1], [1, 0, 0], [1, 0, 1]], dtype=np.uint8)
    packed = pack_bits(bits)
    assert np.array_equal(packed[0], packed[2])
    assert not np.array_equal(packed[0], packed[1])


def test_random_source_streams_replay_and_diverge():
    a = RandomSource(9, 4).generator().random(8)
    b = RandomSource(9, 4).generator().random(8)
    c = RandomSource(9, 5).generator().random(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RandomSource(9).derive(5) == RandomSource(9, 5)


def test_random_source_rejects_negative_ids():
    with pytest.raises(ValueError):
        RandomSource(-1)
    with pytest.raises(ValueError):
        RandomSource(0, -2)


def test_as_generator_accepts_sources_and_generators_only():
    gen = as_generator(RandomSource(2))
    assert as_generator(gen) is gen
    with pytest.raises(ValueError):
        as_generator(42)
