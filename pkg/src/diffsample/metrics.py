"""Target functions over diffusion elements, their averages, and relative bias."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .cascade import Cascade, CascadeSet, DiffusionNetwork
from .estimation import EstimateResult

__all__ = [
    "TargetKind",
    "GroundTruth",
    "MetricError",
    "link_attendance",
    "attendance_values",
    "seeds_fraction",
    "participation",
    "cascade_depth",
    "cascade_size",
    "eta_true",
    "bias",
]


class MetricError(ValueError):
    pass


class TargetKind(str, Enum):
    LINK_ATTENDANCE = "link-attendance"
    SEEDS_FRACTION = "seeds-fraction"
    PARTICIPATION = "participation"
    CASCADE_DEPTH = "cascade-depth"
    CASCADE_SIZE = "cascade-size"

    @property
    def element_class(self) -> str:
        if self is TargetKind.LINK_ATTENDANCE:
            return "link"
        if self in (TargetKind.SEEDS_FRACTION, TargetKind.PARTICIPATION):
            return "node"
        return "cascade"


@dataclass(frozen=True)
class GroundTruth:
    eta_true: float
    element_set_size: int


def link_attendance(dn: DiffusionNetwork, eid: int) -> int:
    """Number of cascades that passed over arc ``eid``; it must belong to G*."""
    if not dn.contains(eid):
        raise MetricError(f"edge {eid} is not part of the diffusion network")
    return int(dn.attendance[eid])


def attendance_values(dn: DiffusionNetwork, eids, binary: bool = False) -> np.ndarray:
    """Attendance of arbitrary sampled arcs of G; arcs outside G* score 0."""
    vals = dn.attendance[np.asarray(eids, dtype=np.int64)].astype(np.float64)
    if binary:
        vals = (vals > 0).astype(np.float64)
    return vals


def seeds_fraction(cs: CascadeSet) -> float:
    if len(cs) == 0:
        raise MetricError("empty cascade set")
    return np.unique(cs.seeds).size / cs.n


def _infected_mask(cs: CascadeSet) -> np.ndarray:
    mask = np.zeros(cs.n, dtype=bool)
    for c in cs:
        mask[c.nodes] = True
    return mask


def participation(cs: CascadeSet) -> float:
    if len(cs) == 0:
        raise MetricError("empty cascade set")
    return float(_infected_mask(cs).sum()) / cs.n


def _depths(c: Cascade) -> np.ndarray:
    if c.parent_nodes is None:
        raise MetricError("cascade carries no transmission ground truth")
    pos = {u: i for i, u in enumerate(c.nodes.tolist())}
    depth = np.zeros(c.size, dtype=np.int64)
    # a parent is always infected strictly earlier, so time order settles it first
    for i in np.argsort(c.node_times, kind="stable").tolist():
        p = int(c.parent_nodes[i])
        if p >= 0:
            depth[i] = depth[pos[p]] + 1
    return depth


def cascade_depth(c: Cascade) -> int:
    """Arcs on the longest path from the seed in the transmission tree."""
    if c.size <= 1:
        return 0
    return int(_depths(c).max())


def cascade_size(c: Cascade) -> int:
    """Number of transmission arcs in the cascade."""
    return int(c.transmissions.size)


def eta_true(
    source: Union[DiffusionNetwork, CascadeSet],
    kind: Union[TargetKind, str],
    binary: bool = False,
) -> GroundTruth:
    """Average of the target function over its element set.

    Link attendance averages over the arcs of G* (``source`` is a
    :class:`DiffusionNetwork`). Node kinds average a 0/1 label over all
    nodes of G and cascade kinds average over the cascades (``source`` is a
    :class:`CascadeSet`).
    """
    kind = TargetKind(kind)
    if kind is TargetKind.LINK_ATTENDANCE:
        if not isinstance(source, DiffusionNetwork):
            raise MetricError("link attendance needs a DiffusionNetwork")
        vals = attendance_values(source, source.edge_ids, binary=binary)
    else:
        if not isinstance(source, CascadeSet):
            raise MetricError(f"{kind.value} needs a CascadeSet")
        if kind is TargetKind.SEEDS_FRACTION:
            vals = np.zeros(source.n)
            vals[np.unique(source.seeds)] = 1.0
        elif kind is TargetKind.PARTICIPATION:
            vals = _infected_mask(source).astype(float)
        elif kind is TargetKind.CASCADE_DEPTH:
            vals = np.array([cascade_depth(c) for c in source], dtype=float)
        else:
            vals = np.array([cascade_size(c) for c in source], dtype=float)
    if vals.size == 0:
        raise MetricError("empty element set")
    return GroundTruth(float(vals.sum() / vals.size), int(vals.size))


def bias(truth: Union[GroundTruth, float], est: Union[EstimateResult, float]) -> float:
    """Relative error ``|truth - estimate| / truth``."""
    t = truth.eta_true if isinstance(truth, GroundTruth) else float(truth)
    e = est.estimate if isinstance(est, EstimateResult) else float(est)
    if t == 0:
        raise MetricError("bias undefined for a zero ground truth")
    return abs(t - e) / t
