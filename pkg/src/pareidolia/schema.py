"""Boundary schema over the 68-point facial landmark layout.

Landmark indices follow the usual 68-point ordering: jaw 0-16, brows 17-26,
nose 27-35, right eye 36-41, left eye 42-47, outer lip 48-59, inner lip 60-67.
Only the animated parts appear as branches: each eye and the inner lip ring,
split into an upper and a lower branch that share their corner landmarks.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import SchemaError

NUM_LANDMARKS = 68


@dataclass(frozen=True)
class BranchSpec:
    """One open boundary branch: a named run of landmark indices."""

    role: str
    part: str
    landmark_indices: tuple


@dataclass(frozen=True)
class BoundarySchema:
    branches: tuple
    rigid_indices: tuple

    def __post_init__(self):
        seen = set()
        for b in self.branches:
            if b.role in seen:
                raise SchemaError(f"duplicate branch role {b.role!r}")
            seen.add(b.role)
            if len(b.landmark_indices) < 2:
                raise SchemaError(f"branch {b.role!r} needs at least two landmarks")
            for i in b.landmark_indices:
                if not 0 <= i < NUM_LANDMARKS:
                    raise SchemaError(
                        f"branch {b.role!r} references landmark {i} outside 0..67"
                    )
        for i in self.rigid_indices:
            if not 0 <= i < NUM_LANDMARKS:
                raise SchemaError(f"rigid subset references landmark {i} outside 0..67")

    def roles(self):
        return [b.role for b in self.branches]

    def branch(self, role):
        for b in self.branches:
            if b.role == role:
                return b
        raise SchemaError(f"unknown branch role {role!r}")

    def part_of(self, role):
        return self.branch(role).part


# Upper and lower branches traverse corner-to-corner in the same direction so
# matched parameter values line up vertically.
DEFAULT_SCHEMA = BoundarySchema(
    branches=(
        BranchSpec("mouth_upper_inner", "mouth", (60, 61, 62, 63, 64)),
        BranchSpec("mouth_lower_inner", "mouth", (60, 67, 66, 65, 64)),
        BranchSpec("eye_right_upper", "eye_right", (36, 37, 38, 39)),
        BranchSpec("eye_right_lower", "eye_right", (36, 41, 40, 39)),
        BranchSpec("eye_left_upper", "eye_left", (42, 43, 44, 45)),
        BranchSpec("eye_left_lower", "eye_left", (42, 47, 46, 45)),
    ),
    # nose bridge plus the four eye corners: rigid under expressions
    rigid_indices=(27, 28, 29, 30, 36, 39, 42, 45),
)
