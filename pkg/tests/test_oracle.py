import math

import numpy as np
import pytest

from bunchlab.distinguishability import InternalStateFamily, bunching_probability
from bunchlab.errors import DimensionError, SizeError, ValidationError
from bunchlab.interferometry import h_matrix
from bunchlab.matcore import random_unitary
from bunchlab.oracle import evolve, fock_bunching_oracle, output_distribution

from conftest import random_unit_vectors

BS = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
SAME = InternalStateFamily([[1, 0], [1, 0]])
ORTH = InternalStateFamily([[1, 0], [0, 1]])


def test_hom_bunching():
    assert fock_bunching_oracle(BS, [0], SAME) == pytest.approx(0.5, abs=1e-15)
    assert fock_bunching_oracle(BS, [0], ORTH) == pytest.approx(0.25, abs=1e-15)


def test_hom_distributions():
    same = dict(output_distribution(BS, SAME))
    assert same == pytest.approx({(2, 0): 0.5, (1, 1): 0.0, (0, 2): 0.5}, abs=1e-15)
    orth = dict(output_distribution(BS, ORTH))
    assert orth == pytest.approx({(2, 0): 0.25, (1, 1): 0.5, (0, 2): 0.25}, abs=1e-15)
    assert [p for p, _ in output_distribution(BS, SAME)] == [(2, 0), (1, 1), (0, 2)]


def test_single_photon_marginal():
    u = random_unitary(4, np.random.default_rng(0))
    dist = dict(output_distribution(u, InternalStateFamily([[1.0]])))
    for l in range(4):
        pattern = tuple(int(k == l) for k in range(4))
        assert dist[pattern] == pytest.approx(abs(u[l, 0]) ** 2)


@pytest.mark.parametrize("seed", range(30))
def test_three_photons_four_modes(seed):
    rng = np.random.default_rng([4, seed])
    u = random_unitary(4, rng)
    states = InternalStateFamily(random_unit_vectors(rng, 3, int(rng.integers(1, 4))))
    oracle = fock_bunching_oracle(u, [0, 1], states)
    formula = bunching_probability(h_matrix(u, [0, 1], 3).H, states.gram())
    assert abs(oracle - formula) <= 1e-10


@pytest.mark.parametrize("seed", range(15))
def test_normalization_and_partition(seed):
    rng = np.random.default_rng([5, seed])
    n = int(rng.integers(1, 4))
    m = int(rng.integers(n, 6))
    u = random_unitary(m, rng)
    states = InternalStateFamily(random_unit_vectors(rng, n, n))
    dist = output_distribution(u, states)
    assert math.fsum(p for _, p in dist) == pytest.approx(1.0, abs=1e-10)
    modes = rng.permutation(m)
    cut = int(rng.integers(1, m)) if m > 1 else 1
    parts = [modes[:cut], modes[cut:]]
    total = sum(fock_bunching_oracle(u, p, states) for p in parts if len(p))
    assert total <= 1 + 1e-12


def test_four_photons_within_caps():
    rng = np.random.default_rng(8)
    u = random_unitary(6, rng)
    states = InternalStateFamily(random_unit_vectors(rng, 4, 2))
    oracle = fock_bunching_oracle(u, [0, 2, 5], states)
    formula = bunching_probability(h_matrix(u, [0, 2, 5], 4).H, states.gram())
    assert abs(oracle - formula) <= 1e-10


def test_amplitude_keys_sorted_and_deterministic():
    rng = np.random.default_rng(2)
    u = random_unitary(3, rng)
    states = InternalStateFamily(random_unit_vectors(rng, 2, 2))
    a, b = evolve(u, states), evolve(u, states)
    assert [s.occupation for s in a] == [s.occupation for s in b]
    assert [s.amplitude for s in a] == [s.amplitude for s in b]
    assert all(sum(s.spatial) == 2 for s in a)


def test_caps_and_errors():
    big = random_unitary(7, np.random.default_rng(0))
    with pytest.raises(SizeError):
        fock_bunching_oracle(big, [0], InternalStateFamily([[1.0]]))
    with pytest.raises(SizeError):
        output_distribution(random_unitary(6, np.random.default_rng(0)), InternalStateFamily(np.ones((5, 1))))
    with pytest.raises(DimensionError):
        fock_bunching_oracle(BS, [0], InternalStateFamily(np.ones((3, 1))))
    with pytest.raises(ValidationError):
        fock_bunching_oracle(BS, [2], SAME)
