"""Shared fixtures: the default synthetic dataset and a tiny-graph builder."""

import pytest

from fedhin.graph import Hin
from fedhin.synth import PRIVATE_EDGE_TYPES, SynthSpec, gen_synth


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synthdata")
    gen_synth(SynthSpec(), out)
    return out


@pytest.fixture(scope="session")
def synth_hin(synth_dir):
    return Hin.load(synth_dir / "nodes.tsv", synth_dir / "edges.tsv",
                    PRIVATE_EDGE_TYPES)


@pytest.fixture
def make_hin(tmp_path):
    """Build a graph from inline TSV rows, exercising the real loader."""

    def build(node_rows, edge_rows, private=("rate",)):
        nodes = tmp_path / "nodes.tsv"
        edges = tmp_path / "edges.tsv"
        nodes.write_text("".join(f"{i}\t{t}\n" for i, t in node_rows))
        edges.write_text("".join(f"{s}\t{d}\t{e}\n" for s, d, e in edge_rows))
        return Hin.load(nodes, edges, private)

    return build
