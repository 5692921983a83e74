import math

import numpy as np
import pytest

from app.bench.metrics import match_and_rmse, match_locations, to_cartesian
from app.exceptions import InvalidArgumentError
from app.schema import SourceLocation


def test_to_cartesian(ula16, upa8):
    """Tests the (x, y) and (x, y, z) conventions."""
    np.testing.assert_allclose(
        to_cartesian(SourceLocation.from_degrees(30.0, 2.0), ula16),
        [1.0, math.sqrt(3.0)],
        atol=1e-12,
    )
    np.testing.assert_allclose(
        to_cartesian(SourceLocation.from_degrees(0.0, 2.0, psi_deg=30.0), upa8),
        [0.0, math.sqrt(3.0), 1.0],
        atol=1e-12,
    )


def test_crossed_estimates_are_reassigned():
    """Tests that the optimal pairing swaps crossed estimates."""
    result = match_and_rmse([[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.1], [0.0, 0.2]])
    assert result.assignment == (1, 0)
    assert result.errors == pytest.approx([0.1, 0.2])
    assert result.rmse == pytest.approx(math.sqrt((0.01 + 0.04) / 2))
    assert result.misses == 0


def test_single_pair():
    """Tests the error of one matched pair."""
    result = match_and_rmse([[0.0, 1.0]], [[0.03, 1.04]])
    assert result.rmse == pytest.approx(0.05)


def test_matching_is_symmetric(rng):
    """Tests that swapping truth and estimates leaves the RMSE unchanged."""
    for _ in range(20):
        a = rng.uniform(-1, 1, (3, 2))
        b = rng.uniform(-1, 1, (5, 2))
        assert match_and_rmse(a, b).rmse == pytest.approx(match_and_rmse(b, a).rmse)


def test_missed_sources():
    """Tests unmatched truth with and without a miss distance."""
    truth = [[0.0, 0.0], [5.0, 0.0]]
    result = match_and_rmse(truth, [[4.9, 0.0]])
    assert result.assignment == (1,)
    assert result.misses == 1
    assert result.rmse == pytest.approx(0.1)

    penalized = match_and_rmse(truth, [[4.9, 0.0]], miss_distance=1.0)
    assert penalized.rmse == pytest.approx(math.sqrt((0.01 + 1.0) / 2))


def test_surplus_estimates_are_left_unassigned():
    """Tests that extra estimates get assignment -1 and no error."""
    result = match_and_rmse([[0.0, 0.0]], [[3.0, 0.0], [0.1, 0.0]])
    assert result.assignment == (-1, 0)
    assert math.isnan(result.errors[0])
    assert result.rmse == pytest.approx(0.1)
    assert result.misses == 0


def test_empty_sets():
    """Tests that nothing matched gives no RMSE unless misses are penalized."""
    assert match_and_rmse([[0.0, 0.0]], []).rmse is None
    assert match_and_rmse([[0.0, 0.0]], [], miss_distance=2.0).rmse == 2.0
    assert match_and_rmse([], []).misses == 0


def test_matching_size_limit():
    """Tests the exhaustive-matching size guard."""
    points = [[float(i), 0.0] for i in range(9)]
    with pytest.raises(InvalidArgumentError, match="up to 8"):
        match_and_rmse(points, points)


def test_match_locations_uses_cartesian_distance(ula16):
    """Tests matching in meters rather than in (phi, r)."""
    truth = [SourceLocation.from_degrees(0.0, 1.0)]
    estimate = [SourceLocation.from_degrees(0.0, 1.02)]
    assert match_locations(truth, estimate, ula16).rmse == pytest.approx(0.02)


def test_range_only_crossing():
    """Tests cross assignment for two sources on the boresight axis."""
    result = match_and_rmse([[0.0, 1.0], [0.0, 3.0]], [[0.0, 3.1], [0.0, 1.2]])
    assert result.assignment == (1, 0)
    assert result.rmse == pytest.approx(math.sqrt((0.1**2 + 0.2**2) / 2))
