"""Joint-limited FABRIK iteration for serial chains.

A chain is an ordered list of joint positions P_1..P_m with fixed link
lengths. One sweep is a forward phase (re-anchor the end at the target,
pull the chain tip-to-base) followed by a backward phase (re-anchor the
base, push base-to-tip). Each point update is a convex blend that
preserves the link length; when the angle at the joint next to the point
being placed violates its limit, the retained point is pre-rotated about
the joint axis by the excess before blending.

Joint angles are measured between consecutive link directions in
base-to-tip orientation, so both phases clamp the same physical
interval. Hinges carry a fixed world axis; ball joints use the cross
product of the adjacent link directions as the correction axis and a
cone half-angle as the limit.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    clamped_arccos,
    perpendicular_axis,
    rotate_about_axis,
    signed_angle,
    unit,
)

_FULL = math.pi


@dataclass(frozen=True)
class Hinge:
    """1-DOF joint about a fixed world axis with signed limits."""

    axis: np.ndarray
    lo: float = -math.pi
    hi: float = math.pi

    def __post_init__(self):
        object.__setattr__(self, "axis", unit(self.axis))
        if self.lo >= self.hi:
            raise ValueError("hinge limits must satisfy lo < hi")

    @property
    def unconstrained(self) -> bool:
        return self.lo <= -_FULL and self.hi >= _FULL


@dataclass(frozen=True)
class Ball:
    """3-DOF joint limited by a cone half-angle (pi = unconstrained)."""

    max_angle: float = math.pi

    @property
    def unconstrained(self) -> bool:
        return self.max_angle >= _FULL


@dataclass(frozen=True)
class ChainState:
    """Joint positions P_1..P_m plus link lengths and per-joint limits.

    joints[j] sits at positions[j] (j = 0..m-2); joints[0] is the base
    joint whose reference direction is anchor_dir (the fixed link feeding
    the chain), or unconstrained when anchor_dir is None.
    """

    positions: np.ndarray  # (m, 3)
    lengths: np.ndarray  # (m-1,)
    joints: tuple
    base: np.ndarray  # fixed location of P_1
    anchor_dir: np.ndarray | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        lengths = np.asarray(self.lengths, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 2:
            raise ValueError("positions must be an (m, 3) array with m >= 2")
        if lengths.shape != (pos.shape[0] - 1,):
            raise ValueError("need one link length per consecutive position pair")
        if np.any(lengths <= 0.0):
            raise ValueError("link lengths must be positive")
        if len(self.joints) != pos.shape[0] - 1:
            raise ValueError("need one joint per movable position P_1..P_{m-1}")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        if self.anchor_dir is not None:
            object.__setattr__(self, "anchor_dir", unit(self.anchor_dir))

    @property
    def end(self) -> np.ndarray:
        return self.positions[-1]

    def link_directions(self) -> np.ndarray:
        diffs = np.diff(self.positions, axis=0)
        return diffs / np.linalg.norm(diffs, axis=1)[:, None]

    def reach(self) -> float:
        return float(np.sum(self.lengths))


def straight_chain(base, direction, lengths, joints, anchor_dir=None) -> ChainState:
    """Chain laid out straight from base along a unit direction."""
    base = np.asarray(base, dtype=float)
    direction = unit(direction)
    lengths = np.asarray(lengths, dtype=float)
    positions = base + np.outer(np.concatenate(([0.0], np.cumsum(lengths))), direction)
    return ChainState(
        positions=positions,
        lengths=lengths,
        joints=joints,
        base=base,
        anchor_dir=anchor_dir,
    )


def clamp_correction(phi: float, limit) -> float:
    """Excess to add to phi so it lands inside [lo, hi] (0 when inside)."""
    lo, hi = limit
    if lo >= hi:
        raise ValueError("limit must satisfy lo < hi")
    if phi > hi:
        return hi - phi
    if phi < lo:
        return lo - phi
    return 0.0


def ball_joint_axis(p0, p1, p2) -> np.ndarray:
    """Correction axis at p1: normalized cross of the two link directions.

    Falls back to a deterministic perpendicular of the incoming link when
    the three points are collinear.
    """
    u1 = unit(np.asarray(p1, dtype=float) - np.asarray(p0, dtype=float))
    u2 = unit(np.asarray(p2, dtype=float) - np.asarray(p1, dtype=float))
    c = np.cross(u1, u2)
    n = float(np.linalg.norm(c))
    if n < 1e-9:
        return perpendicular_axis(u1)
    return c / n


def _limit_correction(l_in, l_out, joint):
    """(delta, axis) needed to clamp the joint angle, or None when legal.

    l_in/l_out are the unit link directions entering and leaving the
    joint, in base-to-tip orientation.
    """
    if joint.unconstrained:
        return None
    if isinstance(joint, Hinge):
        phi = signed_angle(l_in, l_out, joint.axis)
        delta = clamp_correction(phi, (joint.lo, joint.hi))
        if delta == 0.0:
            return None
        return delta, joint.axis
    # ball joint: bend angle is non-negative, only the cone bound applies
    phi = clamped_arccos(float(np.dot(l_in, l_out)))
    if phi <= joint.max_angle:
        return None
    c = np.cross(l_in, l_out)
    n = float(np.linalg.norm(c))
    axis = c / n if n >= 1e-9 else perpendicular_axis(l_in)
    return joint.max_angle - phi, axis


def forward_phase(chain: ChainState, target) -> ChainState:
    """Anchor the end at the target and pull the chain tip-to-base."""
    target = np.asarray(target, dtype=float)
    if not np.all(np.isfinite(target)):
        raise ValueError("target must be finite")
    old = chain.positions
    q = old.copy()
    m = q.shape[0]
    q[m - 1] = target
    for i in range(m - 2, -1, -1):
        pivot = q[i + 1]
        v = old[i] - pivot
        d = float(np.linalg.norm(v))
        length = chain.lengths[i]
        if d < 1e-12:
            # coincident points: extend straight past the pivot
            if i + 2 < m:
                direction = unit(pivot - q[i + 2])
            else:
                direction = unit(old[i] - old[i + 1])
            q[i] = pivot + length * direction
            continue
        if i + 2 < m:
            # clamp the joint at the pivot between the updated outgoing
            # link and the not-yet-moved incoming one
            corr = _limit_correction(-v / d, unit(q[i + 2] - pivot), chain.joints[i + 1])
            if corr is not None:
                delta, axis = corr
                # rotating the retained point by -delta bends the joint
                # angle by +delta (the incoming link moves, not the
                # outgoing one)
                v = rotate_about_axis(axis, -delta, v)
        q[i] = pivot + (length / d) * v
    return replace(chain, positions=q)


def backward_phase(chain: ChainState) -> ChainState:
    """Anchor the base and push the chain base-to-tip."""
    old = chain.positions
    q = old.copy()
    m = q.shape[0]
    q[0] = chain.base
    for i in range(1, m):
        pivot = q[i - 1]
        v = old[i] - pivot
        d = float(np.linalg.norm(v))
        length = chain.lengths[i - 1]
        if d < 1e-12:
            if i >= 2:
                direction = unit(pivot - q[i - 2])
            elif chain.anchor_dir is not None:
                direction = chain.anchor_dir
            else:
                direction = unit(old[i] - old[i - 1])
            q[i] = pivot + length * direction
            continue
        l_in = chain.anchor_dir if i == 1 else unit(pivot - q[i - 2])
        if l_in is not None:
            corr = _limit_correction(l_in, v / d, chain.joints[i - 1])
            if corr is not None:
                delta, axis = corr
                v = rotate_about_axis(axis, delta, v)
        q[i] = pivot + (length / d) * v
    return replace(chain, positions=q)


def pre_bend(
    chain: ChainState,
    bend: float = 1e-3,
    collinear_tol: float = 1e-6,
    axis=None,
) -> ChainState:
    """Break an all-collinear chain with a small fixed bend per joint.

    Straight chains can cycle endlessly under the convex updates (and
    park optimizer seeds on the straight-arm stationary ridge); bending
    each interior joint by `bend` removes the degenerate configuration.
    The bend axis may be supplied by the caller (it resolves which way a
    degenerate, on-axis problem folds); otherwise the first hinge axis
    is used, so hinge chains stay in their working plane, and ball
    chains fall back to a deterministic perpendicular.
    Non-collinear chains are returned unchanged.
    """
    if chain.positions.shape[0] < 3:
        return chain
    dirs = chain.link_directions()
    n_links = dirs.shape[0]
    for i in range(n_links):
        for j in range(i + 1, n_links):
            if clamped_arccos(float(np.dot(dirs[i], dirs[j]))) >= collinear_tol:
                return chain
    if axis is None:
        for joint in chain.joints:
            if isinstance(joint, Hinge):
                axis = joint.axis
                break
    if axis is None:
        axis = perpendicular_axis(dirs[0])
    else:
        axis = unit(axis)
    q = chain.positions.copy()
    for k in range(1, n_links):
        direction = rotate_about_axis(axis, k * bend, dirs[0])
        q[k + 1] = q[k] + chain.lengths[k] * direction
    return replace(chain, positions=q)


@dataclass(frozen=True)
class FabrikOutcome:
    converged: bool
    iterations: int  # full forward+backward sweeps
    dist: float  # end-to-target distance after the last sweep
    chain: ChainState
    trace: tuple | None = None  # ((n, dist), ...) when recorded
    unreachable: bool = False


def solve(
    chain: ChainState,
    target,
    eps_tol: float,
    iter_cap: int,
    record_trace: bool = False,
) -> FabrikOutcome:
    """Iterate forward/backward sweeps until dist <= eps_tol or the cap.

    Targets beyond the chain's total reach return immediately with
    unreachable=True. Targets exactly on the reach sphere (within fp
    noise) are solved directly by laying the chain straight toward them,
    counted as one sweep.
    """
    if eps_tol <= 0.0:
        raise ValueError("eps_tol must be positive")
    if iter_cap < 1:
        raise ValueError("iter_cap must be at least 1")
    target = np.asarray(target, dtype=float)
    reach = chain.reach()
    gap = float(np.linalg.norm(target - chain.base))
    # one-ulp tolerance: on-sphere targets are reachable by contract and
    # must not flip on fp rounding of the gap
    if gap > reach * (1.0 + 1e-12):
        dist = float(np.linalg.norm(chain.end - target))
        return FabrikOutcome(False, 0, dist, chain, () if record_trace else None, True)
    if reach - gap <= 1e-12 * reach and gap > 0.0:
        # full-extension target: the straight chain is the unique solution
        stretched = straight_chain(
            chain.base, (target - chain.base) / gap, chain.lengths, chain.joints, chain.anchor_dir
        )
        dist = float(np.linalg.norm(stretched.end - target))
        trace = ((1, dist),) if record_trace else None
        return FabrikOutcome(dist <= eps_tol, 1, dist, stretched, trace)

    cur = chain
    dist = float(np.linalg.norm(cur.end - target))
    if dist <= eps_tol:
        return FabrikOutcome(True, 0, dist, cur, () if record_trace else None)
    trace = [] if record_trace else None
    n = 0
    while n < iter_cap:
        cur = backward_phase(forward_phase(cur, target))
        n += 1
        dist = float(np.linalg.norm(cur.end - target))
        if trace is not None:
            trace.append((n, dist))
        if dist <= eps_tol:
            break
    return FabrikOutcome(
        dist <= eps_tol, n, dist, cur, tuple(trace) if trace is not None else None
    )


def write_trace_csv(path, trace) -> None:
    """Dump a convergence trace as rows of (n, dist)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "dist"])
        for n, dist in trace:
            writer.writerow([n, f"{dist:.17g}"])
