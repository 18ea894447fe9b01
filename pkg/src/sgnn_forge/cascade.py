"""Diffusion cascades on preferential-attachment graphs.

Builds scale-free contact graphs, runs discrete-time independent-cascade
spreads from a hidden source, masks a fraction of the infected nodes the
way a partial observer would, attaches spectral positional features, and
scores candidate sources with rumor centrality on BFS spanning trees.
"""

from dataclasses import dataclass
from math import lgamma

import numpy as np

from .errors import ParameterError

DEFAULT_GRAPH_NODES = 1_000
DEFAULT_ATTACH_EDGES = 5
DEFAULT_INFECTION_PROB = 0.05
DEFAULT_MAX_STEPS = 15
DEFAULT_MASK_FRACTION = 0.2
DEFAULT_PE_DIM = 16
UNINFECTED_TIME = -1

GRAPH_MODEL_TAG = "preferential-attachment-clique-seed"

_SIGN_TOL = 1e-10


@dataclass
class NetGraph:
    """Undirected graph with sorted adjacency and construction metadata."""

    n: int
    neighbors: tuple          # one sorted int64 array per node
    model: str
    attach_edges: int
    seed: int | None = None

    def __post_init__(self):
        if len(self.neighbors) != self.n:
            raise ParameterError(
                f"adjacency lists ({len(self.neighbors)}) do not match node count ({self.n})"
            )

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.neighbors) // 2

    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.neighbors], dtype=np.int64)


@dataclass
class Cascade:
    """One spread: per-node infection times with a mask for hidden nodes.

    infection_time holds the step at which each node was activated, with
    UNINFECTED_TIME as sentinel for nodes never infected or hidden by
    masking.  observed_mask is False exactly for masked infected nodes,
    so a consumer cannot distinguish them from never-infected ones without
    it.  source is the ground-truth label and survives masking.
    """

    source: int
    infection_time: np.ndarray   # int64, sentinel UNINFECTED_TIME
    observed_mask: np.ndarray    # bool
    infection_prob: float
    max_steps: int

    def visible_infected(self) -> np.ndarray:
        """Nodes whose infection time survives masking, ascending."""
        return np.flatnonzero(self.infection_time >= 0)


@dataclass
class LapPEFeatures:
    """Low-frequency Laplacian eigenvectors used as positional features."""

    vectors: np.ndarray       # n x k, columns ascending by eigenvalue
    eigenvalues: np.ndarray   # k,


@dataclass
class RumorRanking:
    """Candidate sources ordered by rumor centrality.

    scores are log-centralities (the factorial-count form overflows for
    all but toy cascades).  When the visible infected set is disconnected
    on the graph, only the largest connected piece is ranked and
    restricted is set with the observed component count.
    """

    nodes: np.ndarray         # ranked candidate ids, best first
    scores: np.ndarray        # log rumor centrality, aligned with nodes
    restricted: bool
    component_count: int


def generate_ba_graph(n: int = DEFAULT_GRAPH_NODES, m: int = DEFAULT_ATTACH_EDGES,
                      rng=None, seed_label: int | None = None) -> NetGraph:
    """Grow a preferential-attachment graph from an m-clique.

    Each arriving node attaches to m distinct existing nodes, drawn with
    probability proportional to current degree (repeated degree-weighted
    draws, duplicates rejected).  The variant is recorded in the graph
    metadata because the seed topology and attachment scheme both vary
    across implementations.
    """
    if rng is None:
        raise ParameterError("graph generation requires a random generator")
    if m < 1 or n <= m:
        raise ParameterError(f"need n > m >= 1, got n={n}, m={m}")

    adjacency = [set() for _ in range(n)]
    degree = np.zeros(n, dtype=np.float64)
    for i in range(m):
        for j in range(i + 1, m):
            adjacency[i].add(j)
            adjacency[j].add(i)
    degree[:m] = m - 1
    if m == 1:
        # Degenerate seed: a single node has degree zero, so the first
        # arrival attaches uniformly.
        degree[0] = 1.0

    for v in range(m, n):
        weights = degree[:v]
        probs = weights / weights.sum()
        chosen: set = set()
        while len(chosen) < m:
            candidate = int(rng.choice(v, p=probs))
            if candidate not in chosen:
                chosen.add(candidate)
        for u in chosen:
            adjacency[u].add(v)
            adjacency[v].add(u)
            degree[u] += 1.0
        degree[v] = float(m)

    neighbors = tuple(np.array(sorted(nbrs), dtype=np.int64) for nbrs in adjacency)
    return NetGraph(n=n, neighbors=neighbors, model=GRAPH_MODEL_TAG,
                    attach_edges=m, seed=seed_label)


def simulate_ic(graph: NetGraph, source: int, p: float = DEFAULT_INFECTION_PROB,
                max_steps: int = DEFAULT_MAX_STEPS, rng=None) -> Cascade:
    """Run one independent-cascade spread from source.

    Each newly activated node gets a single Bernoulli(p) attempt per
    still-susceptible neighbor on the following step; the process stops
    at quiescence or after max_steps.  Nodes activated earlier within the
    same step are skipped by later activators, which leaves the marginal
    activation probability 1 - (1-p)^k unchanged for a node with k
    attacking neighbors.
    """
    if rng is None:
        raise ParameterError("cascade simulation requires a random generator")
    if not 0 <= source < graph.n:
        raise ParameterError(f"source {source} outside node range [0, {graph.n})")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"infection probability must lie in [0, 1], got {p}")
    if max_steps < 0:
        raise ParameterError(f"max_steps must be nonnegative, got {max_steps}")

    infection_time = np.full(graph.n, UNINFECTED_TIME, dtype=np.int64)
    infection_time[source] = 0
    frontier = [source]
    for step in range(1, max_steps + 1):
        newly = []
        for u in frontier:
            for v in graph.neighbors[u]:
                if infection_time[v] == UNINFECTED_TIME and rng.random() < p:
                    infection_time[v] = step
                    newly.append(int(v))
        if not newly:
            break
        frontier = sorted(newly)

    return Cascade(source=source, infection_time=infection_time,
                   observed_mask=np.ones(graph.n, dtype=bool),
                   infection_prob=p, max_steps=max_steps)


def mask_cascade(cascade: Cascade, frac: float = DEFAULT_MASK_FRACTION,
                 rng=None, mode: str = "exact") -> Cascade:
    """Hide a fraction of the infected nodes from the observer.

    mode "exact" hides floor(frac * infected) uniformly chosen infected
    nodes, so the hidden count is deterministic given the cascade size.
    mode "per-node" hides each infected node independently with
    probability frac, which makes the source hidden in exactly frac of
    cascades regardless of cascade size; tiny cascades are never touched
    by the exact mode because the floor rounds to zero.  Hidden nodes get
    the sentinel infection time and observed_mask False; the source is
    eligible for hiding but stays recorded as the label.
    """
    if not 0.0 <= frac <= 1.0:
        raise ParameterError(f"mask fraction must lie in [0, 1], got {frac}")
    if mode not in ("exact", "per-node"):
        raise ParameterError(f"unknown mask mode {mode!r}")
    infected = np.flatnonzero(cascade.infection_time >= 0)
    times = cascade.infection_time.copy()
    observed = cascade.observed_mask.copy()
    if frac > 0.0 and infected.size:
        if rng is None:
            raise ParameterError("masking requires a random generator")
        if mode == "exact":
            n_mask = int(np.floor(frac * infected.size))
            hidden = rng.choice(infected, size=n_mask, replace=False) if n_mask else []
        else:
            hidden = infected[rng.random(infected.size) < frac]
        times[hidden] = UNINFECTED_TIME
        observed[hidden] = False
    return Cascade(source=cascade.source, infection_time=times,
                   observed_mask=observed, infection_prob=cascade.infection_prob,
                   max_steps=cascade.max_steps)


def draw_cascade_pair(graph: NetGraph, rng, p: float = DEFAULT_INFECTION_PROB,
                      max_steps: int = DEFAULT_MAX_STEPS,
                      mask_frac: float = DEFAULT_MASK_FRACTION,
                      mask_mode: str = "per-node") -> tuple:
    """One corpus draw: uniform source, IC spread, observer masking.

    Returns (true_cascade, masked_cascade).  The first keeps every exact
    infection time as the latent label; the second is the observer's view,
    with hidden nodes blanked.  Per-node masking is the corpus default so
    that the source is hidden in mask_frac of records regardless of how
    large each cascade grew.
    """
    source = int(rng.integers(graph.n))
    cascade = simulate_ic(graph, source, p=p, max_steps=max_steps, rng=rng)
    return cascade, mask_cascade(cascade, frac=mask_frac, rng=rng, mode=mask_mode)


def sample_cascade_record(graph: NetGraph, rng, p: float = DEFAULT_INFECTION_PROB,
                          max_steps: int = DEFAULT_MAX_STEPS,
                          mask_frac: float = DEFAULT_MASK_FRACTION,
                          mask_mode: str = "per-node") -> Cascade:
    """The observer's view of one corpus draw (see draw_cascade_pair)."""
    return draw_cascade_pair(graph, rng, p=p, max_steps=max_steps,
                             mask_frac=mask_frac, mask_mode=mask_mode)[1]


def check_causality(graph: NetGraph, cascade: Cascade) -> bool:
    """True when every node infected at t > 0 has a neighbor infected at t-1.

    Meant for unmasked cascades; masking removes times and can only break
    the property artificially.
    """
    times = cascade.infection_time
    for v in np.flatnonzero(times > 0):
        parents = times[graph.neighbors[v]]
        if not np.any(parents == times[v] - 1):
            return False
    return True


def connected_components(graph: NetGraph) -> list:
    """Connected components as sorted node arrays, largest first."""
    seen = np.zeros(graph.n, dtype=bool)
    components = []
    for start in range(graph.n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in graph.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        components.append(np.array(sorted(comp), dtype=np.int64))
    components.sort(key=lambda c: (-c.size, int(c[0])))
    return components


def laplacian_pe(graph: NetGraph, k: int = DEFAULT_PE_DIM) -> LapPEFeatures:
    """Eigenvectors of L = D - A for the k smallest nonzero eigenvalues.

    Columns are orthonormal, ordered by ascending eigenvalue, and carry a
    deterministic sign (first entry of magnitude above tolerance made
    positive).  Requires a connected graph: with several components the
    zero eigenvalue is degenerate and the low-frequency basis is not
    well defined, so the component count is reported instead.
    """
    if not 1 <= k < graph.n:
        raise ParameterError(f"need 1 <= k < n, got k={k}, n={graph.n}")
    components = connected_components(graph)
    if len(components) > 1:
        raise ParameterError(
            f"graph has {len(components)} connected components; "
            "positional features need a connected graph"
        )

    laplacian = np.zeros((graph.n, graph.n), dtype=np.float64)
    for u, nbrs in enumerate(graph.neighbors):
        laplacian[u, u] = len(nbrs)
        laplacian[u, nbrs] = -1.0
    eigenvalues, eigenvectors = np.linalg.eigh(laplacian)

    vectors = eigenvectors[:, 1:k + 1].copy()
    values = eigenvalues[1:k + 1].copy()
    for col in range(vectors.shape[1]):
        column = vectors[:, col]
        nonzero = np.flatnonzero(np.abs(column) > _SIGN_TOL)
        if nonzero.size and column[nonzero[0]] < 0:
            vectors[:, col] = -column
    return LapPEFeatures(vectors=vectors, eigenvalues=values)


def _bfs_tree(neighbor_map: dict, root: int) -> dict:
    """BFS spanning tree as child lists; neighbors visited in sorted order."""
    children: dict = {root: []}
    queue = [root]
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        for v in neighbor_map[u]:
            if v not in children:
                children[v] = []
                children[u].append(v)
                queue.append(v)
    return children


def _log_rumor_centrality(children: dict, root: int, size: int) -> float:
    """log of size! / product of subtree sizes over the rooted tree."""
    subtree = {}
    order = [root]
    head = 0
    while head < len(order):
        order.extend(children[order[head]])
        head += 1
    for u in reversed(order):
        subtree[u] = 1 + sum(subtree[c] for c in children[u])
    log_product = sum(np.log(s) for s in subtree.values())
    return lgamma(size + 1) - log_product


def rumor_center(graph: NetGraph, infected) -> RumorRanking:
    """Rank candidate sources in an infected set by rumor centrality.

    Each candidate root gets a BFS spanning tree of the infected
    subgraph; the exact tree counting formula then scores how many
    infection orderings start at that root.  On trees the BFS tree is
    the subgraph itself and the score is exact.  Candidates are ranked
    by descending score with ties broken by ascending node id.
    """
    infected = np.unique(np.asarray(list(infected), dtype=np.int64))
    if infected.size == 0:
        raise ParameterError("rumor centrality needs a non-empty infected set")
    if infected.min() < 0 or infected.max() >= graph.n:
        raise ParameterError("infected set contains ids outside the graph")

    infected_set = set(int(v) for v in infected)
    neighbor_map = {
        v: [int(u) for u in graph.neighbors[v] if int(u) in infected_set]
        for v in infected_set
    }

    # Restrict to the largest connected piece of the infected subgraph.
    unvisited = set(infected_set)
    pieces = []
    while unvisited:
        start = min(unvisited)
        stack = [start]
        unvisited.discard(start)
        piece = [start]
        while stack:
            u = stack.pop()
            for v in neighbor_map[u]:
                if v in unvisited:
                    unvisited.discard(v)
                    piece.append(v)
                    stack.append(v)
        pieces.append(sorted(piece))
    pieces.sort(key=lambda p: (-len(p), p[0]))
    component = pieces[0]
    restricted = len(pieces) > 1

    size = len(component)
    scores = np.empty(size, dtype=np.float64)
    for idx, root in enumerate(component):
        children = _bfs_tree(neighbor_map, root)
        scores[idx] = _log_rumor_centrality(children, root, size)

    nodes = np.array(component, dtype=np.int64)
    order = np.lexsort((nodes, -scores))
    return RumorRanking(nodes=nodes[order], scores=scores[order],
                        restricted=restricted, component_count=len(pieces))


def edge_list_lines(graph: NetGraph) -> list:
    """Edges as "u v" text lines with u < v, ascending."""
    lines = []
    for u, nbrs in enumerate(graph.neighbors):
        for v in nbrs:
            if u < v:
                lines.append(f"{u} {v}")
    return lines


def graph_from_edge_lines(lines) -> NetGraph:
    """Rebuild a graph from edge-list text lines."""
    edges = []
    max_node = -1
    for raw in lines:
        text = raw.strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 2:
            raise ParameterError(f"malformed edge line: {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParameterError(f"malformed edge line: {raw!r}") from None
        if u == v:
            raise ParameterError(f"self-loop in edge list: {raw!r}")
        edges.append((u, v))
        max_node = max(max_node, u, v)
    n = max_node + 1
    if n == 0:
        raise ParameterError("edge list is empty")
    adjacency = [set() for _ in range(n)]
    for u, v in edges:
        adjacency[u].add(v)
        adjacency[v].add(u)
    neighbors = tuple(np.array(sorted(nbrs), dtype=np.int64) for nbrs in adjacency)
    return NetGraph(n=n, neighbors=neighbors, model="edge-list-import",
                    attach_edges=0, seed=None)
