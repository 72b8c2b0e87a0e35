import os
from pathlib import Path

import numpy as np
import pytest

from anfsketch.graph import Graph

DATA_DIR = Path(os.environ.get("ANFSKETCH_DATA", Path(__file__).resolve().parent.parent / "data"))

DATASETS = {
    "facebook": ("facebook_combined.txt", "facebook_combined.txt.gz"),
    "twitter": ("twitter_combined.txt", "twitter_combined.txt.gz"),
    "mastodon": ("mastodon.txt", "mastodon.txt.gz", "mastodon_edges.txt", "mastodon_edges.txt.gz"),
}


def find_dataset(name: str) -> Path | None:
    for filename in DATASETS[name]:
        path = DATA_DIR / filename
        if path.exists():
            return path
    return None


def random_graph(rng: np.random.Generator, n: int, m: int, directed: bool = False) -> Graph:
    """Arbitrary multigraph-with-loops input; ingestion cleans it up."""
    src = rng.integers(0, n, size=m)
    dst = rng.integers(0, n, size=m)
    return Graph.from_arcs(n, src, dst, directed=directed)


def to_networkx(g: Graph):
    import networkx as nx

    G = nx.DiGraph() if g.directed else nx.Graph()
    G.add_nodes_from(range(g.n))
    src, dst = g.edges()
    G.add_edges_from(zip(src.tolist(), dst.tolist()))
    return G


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(criterion: int, status: str, detail: str) -> None:
    line = f"criterion {criterion}: {status} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
