"""Cartesian positions and assignment-matched RMSE."""

import itertools
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.array.geometry import ArrayGeometry, as_parameter_matrix, source_positions
from app.exceptions import InvalidArgumentError
from app.schema import SourceLocation


MAX_MATCHED_SOURCES = 8


class MatchResult(BaseModel):
    """Best injective pairing of estimates with true positions.

    ``assignment[j]`` is the truth index matched to estimate j. ``rmse`` pools the
    squared errors of all matched pairs (plus ``miss_distance`` per unmatched truth
    when one is configured) and is None when nothing could be matched.
    """

    assignment: Tuple[int, ...] = Field(default_factory=tuple)
    errors: List[float] = Field(default_factory=list, description="Per-estimate error (m)")
    rmse: Optional[float] = Field(None, ge=0)
    misses: int = Field(0, ge=0, description="True sources left unmatched")


def to_cartesian(loc: SourceLocation, geometry: ArrayGeometry) -> np.ndarray:
    """(x, y) meters for a ULA, (x, y, z) for a UPA."""
    position = source_positions(geometry, as_parameter_matrix(geometry, loc))[0]
    return position if geometry.is_planar else position[:2]


def match_and_rmse(
    truth: Sequence[Sequence[float]],
    estimates: Sequence[Sequence[float]],
    miss_distance: Optional[float] = None,
) -> MatchResult:
    """Minimize the summed squared distance over all injective assignments.

    The smaller set is matched into the larger one, so the result does not depend on
    which argument holds the truth.
    """
    k, n = len(truth), len(estimates)
    if max(k, n) > MAX_MATCHED_SOURCES:
        raise InvalidArgumentError(
            f"Exhaustive matching supports up to {MAX_MATCHED_SOURCES} sources, got {max(k, n)}"
        )
    misses = max(k - n, 0)
    if n == 0 or k == 0:
        rmse = miss_distance if (miss_distance is not None and misses) else None
        return MatchResult(rmse=rmse, misses=misses)

    truth = np.asarray(truth, dtype=float).reshape(k, -1)
    estimates = np.asarray(estimates, dtype=float).reshape(n, -1)

    squared = np.sum((estimates[:, None, :] - truth[None, :, :]) ** 2, axis=-1)
    if n <= k:
        perms = np.array(list(itertools.permutations(range(k), n)))
        totals = squared[np.arange(n), perms].sum(axis=1)
        assignment = tuple(int(t) for t in perms[int(np.argmin(totals))])
    else:
        perms = np.array(list(itertools.permutations(range(n), k)))
        totals = squared[perms, np.arange(k)].sum(axis=1)
        chosen = perms[int(np.argmin(totals))]
        assignment = tuple(
            int(np.flatnonzero(chosen == j)[0]) if j in chosen else -1 for j in range(n)
        )

    errors = [
        math.sqrt(squared[j, t]) if t >= 0 else math.nan for j, t in enumerate(assignment)
    ]
    pooled = [e**2 for e in errors if not math.isnan(e)]
    if miss_distance is not None:
        pooled += [miss_distance**2] * misses
    return MatchResult(
        assignment=assignment,
        errors=errors,
        rmse=math.sqrt(sum(pooled) / len(pooled)),
        misses=misses,
    )


def match_locations(
    truth: Sequence[SourceLocation],
    estimates: Sequence[SourceLocation],
    geometry: ArrayGeometry,
    miss_distance: Optional[float] = None,
) -> MatchResult:
    return match_and_rmse(
        [to_cartesian(loc, geometry) for loc in truth],
        [to_cartesian(loc, geometry) for loc in estimates],
        miss_distance,
    )
