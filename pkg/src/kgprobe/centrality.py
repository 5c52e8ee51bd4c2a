"""Exact centrality measures for the small per-problem graphs.

All measures treat the triple list as a directed graph over node labels.
Parallel triples between the same (subject, object) pair collapse to a
single arc; relation labels never influence centrality.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from kgprobe.errors import ConvergenceError
from kgprobe.kg_core import Triple


@dataclass(frozen=True)
class CentralityScores:
    """Per-node scores for one centrality kind."""

    kind: str  # degree | betweenness | pagerank
    scores: dict[str, float]

    def __getitem__(self, node: str) -> float:
        return self.scores[node]


def _nodes_and_arcs(triples: Sequence[Triple]) -> tuple[list[str], set[tuple[str, str]]]:
    nodes: list[str] = []
    seen: set[str] = set()
    arcs: set[tuple[str, str]] = set()
    for t in triples:
        for label in (t.subject, t.object):
            if label not in seen:
                seen.add(label)
                nodes.append(label)
        arcs.add((t.subject, t.object))
    return nodes, arcs


def degree_centrality(triples: Sequence[Triple]) -> CentralityScores:
    """Total degree (in + out) per node over the deduplicated arc set."""
    nodes, arcs = _nodes_and_arcs(triples)
    scores = {n: 0.0 for n in nodes}
    for u, v in arcs:
        scores[u] += 1.0
        scores[v] += 1.0
    return CentralityScores("degree", scores)


def betweenness_centrality(triples: Sequence[Triple]) -> CentralityScores:
    """Exact directed node betweenness via Brandes' accumulation.

    Unnormalized: a node's score is the sum over ordered source/target pairs
    of the fraction of shortest paths passing through it.
    """
    node_scores, _ = _brandes(triples)
    return CentralityScores("betweenness", node_scores)


def edge_betweenness(triples: Sequence[Triple]) -> dict[tuple[str, str], float]:
    """Exact directed edge betweenness per (subject, object) arc."""
    _, arc_scores = _brandes(triples)
    return arc_scores


def _brandes(
    triples: Sequence[Triple],
) -> tuple[dict[str, float], dict[tuple[str, str], float]]:
    nodes, arcs = _nodes_and_arcs(triples)
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for u, v in sorted(arcs):
        succ[u].append(v)

    node_scores = {n: 0.0 for n in nodes}
    arc_scores = {a: 0.0 for a in arcs}
    for source in nodes:
        stack: list[str] = []
        preds: dict[str, list[str]] = {n: [] for n in nodes}
        sigma = {n: 0.0 for n in nodes}
        sigma[source] = 1.0
        dist = {n: -1 for n in nodes}
        dist[source] = 0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = {n: 0.0 for n in nodes}
        while stack:
            w = stack.pop()
            for v in preds[w]:
                share = sigma[v] / sigma[w] * (1.0 + delta[w])
                arc_scores[(v, w)] += share
                delta[v] += share
            if w != source:
                node_scores[w] += delta[w]
    return node_scores, arc_scores


def pagerank(
    triples: Sequence[Triple],
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> CentralityScores:
    """Power iteration with uniform teleport and dangling-mass redistribution.

    Converged when the L1 change between iterations drops below ``tol``;
    raises :class:`ConvergenceError` (carrying the last delta) otherwise.
    """
    nodes, arcs = _nodes_and_arcs(triples)
    if not nodes:
        raise ValueError("pagerank requires a non-empty graph")
    n = len(nodes)
    succ: dict[str, list[str]] = {u: [] for u in nodes}
    for u, v in sorted(arcs):
        succ[u].append(v)

    rank = {u: 1.0 / n for u in nodes}
    base = (1.0 - damping) / n
    for _ in range(max_iter):
        dangling = sum(rank[u] for u in nodes if not succ[u])
        nxt = {u: base + damping * dangling / n for u in nodes}
        for u in nodes:
            out = succ[u]
            if out:
                share = damping * rank[u] / len(out)
                for v in out:
                    nxt[v] += share
        delta = sum(abs(nxt[u] - rank[u]) for u in nodes)
        rank = nxt
        if delta < tol:
            return CentralityScores("pagerank", rank)
    raise ConvergenceError(
        f"pagerank did not converge in {max_iter} iterations", last_delta=delta
    )
