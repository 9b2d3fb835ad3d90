"""Discretized 4n-branch time-reversal contour for the multi-round echo.

One round contributes four branches: the forward and backward evolutions
each act on both sides (ket/bra) of the traced operator.  Reading the
trace cyclically from the first probe insertion, the contour visits the
ket branches in round order and returns through the bra branches in
reverse round order, so position p pairs with position 4n+1-p as the two
sides of one evolution superoperator.  For n = 2 the order is

    1 ket-fwd-r1 | 2 ket-bwd-r1 | 3 ket-fwd-r2 | 4 ket-bwd-r2 |
    5 bra-bwd-r2 | 6 bra-fwd-r2 | 7 bra-bwd-r1 | 8 bra-fwd-r1

with same-superoperator pairs (1,8), (2,7), (3,6), (4,5).  The first
probe insertion sits at the very start of branch 1; the second sits at
the ket/bra turnaround, i.e. the end of branch 2n.

Each branch carries M+1 nodes at local times i*dt (dt = t_max/M), where
local time is the evolution's own clock.  The contour parameter runs
with local time on ket branches and against it on bra branches.  The
action factor zeta_p = (-1)^(p+1) records whether the branch evolves
with e^{-iH.} (+1) or e^{+iH.} (-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridSizeError

DEFAULT_NODE_CAP = 20_000


@dataclass(frozen=True)
class BranchMeta:
    position: int              # contour order index p, 1-based
    side: str                  # 'ket' | 'bra'
    direction: str             # 'forward' | 'backward'
    round_index: int           # 1..n
    action_factor: float       # zeta_p = +1 / -1

    @property
    def is_backward(self) -> bool:
        return self.direction == "backward"


def _branch_meta(p: int, n: int) -> BranchMeta:
    if p <= 2 * n:
        side = "ket"
        round_index = (p + 1) // 2
        direction = "forward" if p % 2 == 1 else "backward"
    else:
        side = "bra"
        q = p - 2 * n
        round_index = n - (q - 1) // 2
        direction = "backward" if q % 2 == 1 else "forward"
    return BranchMeta(position=p, side=side, direction=direction,
                      round_index=round_index,
                      action_factor=1.0 if p % 2 == 1 else -1.0)


@dataclass(frozen=True)
class ContourGrid:
    n_rounds: int
    t_max: float
    points_per_branch: int                 # M; each branch holds M+1 nodes
    branches: tuple = field(repr=False)
    local_time: np.ndarray = field(repr=False)    # node -> i*dt
    local_index: np.ndarray = field(repr=False)   # node -> i
    branch_of: np.ndarray = field(repr=False)     # node -> p (1-based)
    rank: np.ndarray = field(repr=False)          # strict contour order
    weights: np.ndarray = field(repr=False)       # trapezoid, contour measure
    zeta: np.ndarray = field(repr=False)          # node -> action factor

    @property
    def dt(self) -> float:
        return self.t_max / self.points_per_branch

    @property
    def n_nodes(self) -> int:
        return 4 * self.n_rounds * (self.points_per_branch + 1)

    def node(self, p: int, i: int) -> int:
        """Global index of local node i on branch p (both endpoints included)."""
        if not 1 <= p <= 4 * self.n_rounds:
            raise DomainError(f"branch position {p} out of range")
        if not 0 <= i <= self.points_per_branch:
            raise DomainError(f"local index {i} out of range")
        return (p - 1) * (self.points_per_branch + 1) + i

    def branch_nodes(self, p: int) -> np.ndarray:
        m = self.points_per_branch + 1
        return np.arange((p - 1) * m, p * m)

    def superoperator_pairs(self):
        """Same-superoperator branch pairs (p, 4n+1-p), p = 1..2n."""
        n4 = 4 * self.n_rounds
        return [(p, n4 + 1 - p) for p in range(1, 2 * self.n_rounds + 1)]

    def backward_positions(self):
        return [b.position for b in self.branches if b.is_backward]

    @property
    def probe_start_node(self) -> int:
        """Node at the first probe insertion (start of branch 1)."""
        return self.node(1, 0)

    @property
    def probe_end_node(self) -> int:
        """Node at the second probe insertion (ket/bra turnaround)."""
        return self.node(2 * self.n_rounds, self.points_per_branch)


def build_contour(n: int, t_max: float, M: int,
                  node_cap: int = DEFAULT_NODE_CAP) -> ContourGrid:
    """Construct the 4n-branch grid with M+1 nodes per branch."""
    if n < 1 or n != int(n):
        raise DomainError(f"n must be a positive integer, got {n}")
    if t_max <= 0:
        raise DomainError(f"t_max must be positive, got {t_max}")
    if M < 8 or M != int(M):
        raise DomainError(f"M must be an integer >= 8, got {M}")
    n, M = int(n), int(M)
    n_branches = 4 * n
    n_nodes = n_branches * (M + 1)
    if n_nodes > node_cap:
        raise GridSizeError(
            f"grid would hold {n_nodes} nodes, above the cap {node_cap}; "
            "raise node_cap explicitly if this size is intended")

    dt = t_max / M
    branches = tuple(_branch_meta(p, n) for p in range(1, n_branches + 1))

    i = np.tile(np.arange(M + 1), n_branches)
    p = np.repeat(np.arange(1, n_branches + 1), M + 1)
    local_time = i * dt
    zeta = np.where(p % 2 == 1, 1.0, -1.0)

    # Strict contour rank: branches in order, ket branches traversed with
    # local time, bra branches against it.  Duplicated junction nodes get
    # adjacent ranks, which fixes the ordered equal-point value of sgn.
    is_bra = p > 2 * n
    rank = (p - 1) * (M + 1) + np.where(is_bra, M - i, i)

    weights = np.full(n_nodes, dt)
    weights[(i == 0) | (i == M)] = 0.5 * dt

    return ContourGrid(n_rounds=n, t_max=float(t_max), points_per_branch=M,
                       branches=branches, local_time=local_time,
                       local_index=i, branch_of=p, rank=rank,
                       weights=weights, zeta=zeta)


def free_propagator(grid: ContourGrid) -> np.ndarray:
    """Infinite-temperature free two-point function G0 = sgn_contour / 2."""
    r = grid.rank
    g0 = np.sign(r[:, None] - r[None, :]).astype(float)
    g0 *= 0.5
    return g0
