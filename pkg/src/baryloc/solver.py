"""Assembly and solution of the global barycentric system.

With anchors ordered first, the stacked generalized rows form

    G = [[A, B],
         [C, D]]

and anchors keep their positions, so ``A = I`` and ``B = 0``. The unknown
block satisfies ``(I - D) X_u = C X_a``.
"""

import warnings
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

__all__ = [
    "LocalizationSystem",
    "LocalizationResult",
    "SINGULAR_RCOND",
    "assemble",
    "system_from_blocks",
    "solve_direct",
    "solve_iterative",
    "rcond_estimate",
    "disjoint_paths_diagnostic",
    "residual",
]

SINGULAR_RCOND = 1e-12
DIVERGENCE_FACTOR = 1e6
DEFAULT_MAX_ITERS = 10_000


@dataclass(frozen=True)
class LocalizationSystem:
    anchor_ids: tuple
    unknown_ids: tuple
    C: np.ndarray  # q x p
    D: np.ndarray  # q x q
    anchor_coords: np.ndarray  # p x n

    @property
    def p(self):
        return len(self.anchor_ids)

    @property
    def q(self):
        return len(self.unknown_ids)

    @property
    def m(self):
        return self.p + self.q

    @property
    def dimension(self):
        return self.anchor_coords.shape[1]

    @property
    def permutation(self):
        """Original node id -> index in the anchors-first ordering."""
        return {i: k for k, i in enumerate(self.anchor_ids + self.unknown_ids)}

    @property
    def A(self):
        return np.eye(self.p)

    @property
    def B(self):
        return np.zeros((self.p, self.q))

    def G(self):
        """The full partitioned matrix ``[[A, B], [C, D]]``."""
        return np.block([[self.A, self.B], [self.C, self.D]])


@dataclass
class LocalizationResult:
    status: str  # "solved" | "singular" | "diverged"
    solved_coords: dict = field(default_factory=dict)
    rcond: float = float("nan")
    residual: float = float("nan")
    iterations: int = 0

    @property
    def ok(self):
        return self.status == "solved"


def assemble(net, rows):
    """Stack generalized rows of the non-anchor nodes of ``net``.

    ``rows`` maps node id to :class:`~baryloc.barycentric.CoordinateRow`;
    entries for anchors are ignored.
    """
    n = net.dimension
    anchors = tuple(sorted(net.anchors))
    if len(anchors) < n + 1:
        raise ValueError(f"need at least {n + 1} anchors in R^{n}, got {len(anchors)}")
    unknowns = net.unknowns
    missing = [i for i in unknowns if i not in rows]
    if missing:
        raise ValueError(f"no coordinate row for non-anchor nodes {missing}")
    a_idx = {i: k for k, i in enumerate(anchors)}
    u_idx = {i: k for k, i in enumerate(unknowns)}
    C = np.zeros((len(unknowns), len(anchors)))
    D = np.zeros((len(unknowns), len(unknowns)))
    for r, l in enumerate(unknowns):
        for j, w in rows[l].weights.items():
            if j in a_idx:
                C[r, a_idx[j]] += w
            elif j in u_idx:
                D[r, u_idx[j]] += w
            else:
                raise ValueError(f"row of node {l} references node {j} outside the network")
    Xa = np.array([net.coords[i] for i in anchors], dtype=float).reshape(len(anchors), n)
    return LocalizationSystem(anchors, unknowns, C, D, Xa)


def system_from_blocks(C, D, anchor_coords, anchor_ids=None, unknown_ids=None):
    """Build a system directly from blocks (constructed test systems)."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    Xa = np.atleast_2d(np.asarray(anchor_coords, dtype=float))
    p, q = Xa.shape[0], D.shape[0]
    anchor_ids = tuple(range(1, p + 1)) if anchor_ids is None else tuple(anchor_ids)
    unknown_ids = tuple(range(p + 1, p + q + 1)) if unknown_ids is None else tuple(unknown_ids)
    return LocalizationSystem(anchor_ids, unknown_ids, C.reshape(q, p), D.reshape(q, q), Xa)


def _lu_rcond(M):
    """LU factors and 1-norm reciprocal condition estimate of ``M``."""
    anorm = np.linalg.norm(M, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=False)
    if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0.0) or anorm == 0.0:
        return lu, piv, 0.0
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    return lu, piv, float(min(max(rcond, 0.0), 1.0))


def rcond_estimate(sys):
    """1-norm reciprocal condition estimate of ``I - D``, in ``[0, 1]``."""
    if sys.q == 0:
        return 1.0
    return _lu_rcond(np.eye(sys.q) - sys.D)[2]


def residual(sys, Xu):
    """Largest absolute entry of ``G X - X`` (anchor rows vanish exactly)."""
    if sys.q == 0:
        return 0.0
    r = sys.C @ sys.anchor_coords + sys.D @ Xu - Xu
    return float(np.max(np.abs(r)))


def _as_dict(sys, Xu):
    return {i: Xu[k].copy() for k, i in enumerate(sys.unknown_ids)}


def solve_direct(sys, singular_rcond=SINGULAR_RCOND):
    """Solve ``(I - D) X_u = C X_a`` with one LU factorization."""
    if sys.q == 0:
        return LocalizationResult("solved", {}, 1.0, 0.0)
    lu, piv, rcond = _lu_rcond(np.eye(sys.q) - sys.D)
    if rcond < singular_rcond:
        return LocalizationResult("singular", rcond=rcond)
    Xu = sla.lu_solve((lu, piv), sys.C @ sys.anchor_coords, check_finite=False)
    return LocalizationResult("solved", _as_dict(sys, Xu), rcond, residual(sys, Xu))


def solve_iterative(sys, x0=None, max_iters=DEFAULT_MAX_ITERS, tol=1e-10, omega=1.0):
    """Richardson iteration ``X <- X + omega (C X_a - (I - D) X)``.

    With ``omega = 1`` this is the plain fixed-point sweep
    ``X <- C X_a + D X``. Stops when the largest coordinate change drops to
    ``tol``; reports ``diverged`` if the change grows past
    ``DIVERGENCE_FACTOR`` times the first change or ``max_iters`` runs out.
    """
    q, n = sys.q, sys.dimension
    if q == 0:
        return LocalizationResult("solved", {}, 1.0, 0.0)
    X = np.zeros((q, n)) if x0 is None else np.array(x0, dtype=float).reshape(q, n)
    b = sys.C @ sys.anchor_coords
    first = None
    rcond = rcond_estimate(sys)
    for it in range(1, max_iters + 1):
        step = omega * (b + sys.D @ X - X)
        X = X + step
        change = float(np.max(np.abs(step)))
        if not np.isfinite(change):
            return LocalizationResult("diverged", rcond=rcond, iterations=it)
        if change <= tol:
            return LocalizationResult("solved", _as_dict(sys, X), rcond, residual(sys, X), it)
        if first is None:
            first = change
        elif change > DIVERGENCE_FACTOR * first:
            return LocalizationResult("diverged", rcond=rcond, iterations=it)
    return LocalizationResult("diverged", rcond=rcond, iterations=max_iters)


def support_graph(sys, tol=0.0):
    """Undirected graph with an edge wherever ``|G_ij| > tol`` off the diagonal."""
    g = nx.Graph()
    g.add_nodes_from(sys.anchor_ids + sys.unknown_ids)
    rows, cols = np.nonzero(np.abs(sys.C) > tol)
    g.add_edges_from((sys.unknown_ids[r], sys.anchor_ids[c]) for r, c in zip(rows, cols))
    rows, cols = np.nonzero(np.abs(sys.D) > tol)
    g.add_edges_from(
        (sys.unknown_ids[r], sys.unknown_ids[c]) for r, c in zip(rows, cols) if r != c
    )
    return g


def disjoint_paths_diagnostic(sys, k=None, vertex_disjoint=True, tol=1e-12):
    """Whether each unknown has ``k`` disjoint paths to the anchor set.

    Paths run in the support graph of ``G`` with anchor rows fixed to unit
    rows. A super-source is joined to every anchor and the count is the
    max-flow from the unknown to it, with unit vertex capacities by default
    (so the paths also end at distinct anchors). ``k`` defaults to ``n + 1``.
    Returns a mapping unknown id -> bool.
    """
    if k is None:
        k = sys.dimension + 1
    g = support_graph(sys, tol)
    source = ("anchors",)
    g.add_edges_from((source, a) for a in sys.anchor_ids)
    out = {}
    for u in sys.unknown_ids:
        if vertex_disjoint:
            count = nx.algorithms.connectivity.local_node_connectivity(g, u, source)
        else:
            count = nx.algorithms.connectivity.local_edge_connectivity(g, u, source)
        out[u] = count >= k
    return out
