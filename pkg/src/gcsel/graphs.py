"""Dependency graphs: regress every column on all the others."""

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import Dataset
from .exceptions import DataError
from .selection import repeated_stepwise, stepwise

__all__ = ["DependencyGraph", "dependency_graph", "node_neighbours", "default_threads"]


def default_threads():
    """Worker count from ``GCSEL_THREADS`` or the number of usable CPUs."""
    env = os.environ.get("GCSEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


@dataclass
class DependencyGraph:
    """Edges ``(i, ell)`` meaning column ``ell`` was selected for column ``i``.

    Nodes are zero-based column positions.  When ``symmetric`` is true each
    edge is stored once as ``(min, max)``.
    """

    edges: list
    q: int
    alpha_effective: float
    symmetric: bool = False
    names: list = field(default=None, repr=False)

    def __len__(self):
        return len(self.edges)

    def undirected(self):
        """Set of unordered pairs; a pair is present if either direction is."""
        return {(min(i, j), max(i, j)) for i, j in self.edges}

    def symmetrized(self):
        return DependencyGraph(
            sorted(self.undirected()), self.q, self.alpha_effective, True, self.names
        )

    def adjacency(self):
        adj = {i: [] for i in range(self.q)}
        for i, j in self.edges:
            adj[i].append(j)
            if self.symmetric:
                adj[j].append(i)
        return {i: sorted(v) for i, v in adj.items()}

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "ell"])
            writer.writerows(self.edges)

    def to_json(self, path=None):
        payload = {
            "q": self.q,
            "alpha_effective": self.alpha_effective,
            "symmetric": self.symmetric,
            "names": self.names,
            "adjacency": {str(i): v for i, v in self.adjacency().items()},
        }
        text = json.dumps(payload, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def node_neighbours(data, node, alpha_effective, nu=1, repeated=False):
    """Columns selected when column ``node`` is regressed on the others."""
    sub = data.with_response(data.x[:, node])
    mask = np.ones(data.q, dtype=bool)
    mask[node] = False
    if repeated:
        rounds = repeated_stepwise(sub, alpha=alpha_effective, nu=nu, pool_mask=mask)
        chosen = [j for tr in rounds for j in tr.covariates]
    else:
        chosen = stepwise(sub, alpha=alpha_effective, nu=nu, pool_mask=mask).covariates
    return sorted(j - 1 for j in chosen)


def dependency_graph(
    x, alpha=0.01, nu=1, repeated=False, symmetrize=False, intercept=True, names=None, threads=None
):
    """Build the dependency graph of the columns of ``x``.

    Parameters
    ----------
    x : array-like of shape (n, q) or Dataset
        Covariates only; a Dataset's response is ignored.
    alpha : float, default=0.01
        Graph-wide level.  Each node regression uses ``alpha / q``.
    nu : int, default=1
    repeated : bool, default=False
        Use repeated stepwise selection for each node.
    symmetrize : bool, default=False
        Identify ``(i, ell)`` with ``(ell, i)``; an undirected edge is kept if
        either direction was found.
    threads : int, optional
        Worker threads; defaults to :func:`default_threads`.
    """
    if isinstance(x, Dataset):
        data = x
        names = data.names if names is None else names
    else:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise DataError("x must be a two-dimensional array")
        data = Dataset(x, x[:, 0], names=names, intercept=intercept)
    q = data.q
    if q < 2:
        raise DataError("a dependency graph needs at least two columns")
    alpha_eff = alpha / q
    threads = default_threads() if threads is None else max(1, int(threads))
    data.colnorm2  # warm the shared cache before fanning out

    def work(node):
        return node, node_neighbours(data, node, alpha_eff, nu=nu, repeated=repeated)

    if threads == 1:
        results = [work(i) for i in range(q)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(q)))
    results.sort(key=lambda item: item[0])
    edges = [(i, j) for i, nb in results for j in nb]
    graph = DependencyGraph(edges, q, alpha_eff, False, list(data.names))
    return graph.symmetrized() if symmetrize else graph
