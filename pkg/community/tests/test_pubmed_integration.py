"""
Pubmed citation graph check
Needs PILOTNET_PUBMED_EDGES and PILOTNET_PUBMED_LABELS; run with `pytest -m integration`
"""

import os

import pytest

from community.src.evaluation.metrics import misclustering_rate
from community.src.spectral.core import full_spectral_clustering
from community.utils.graph_io import load_edge_list, load_labels

pytestmark = pytest.mark.integration

EDGES = os.environ.get("PILOTNET_PUBMED_EDGES")
LABELS = os.environ.get("PILOTNET_PUBMED_LABELS")


@pytest.mark.skipif(not (EDGES and LABELS), reason="Pubmed files not configured")
class TestPubmed:
    """Whole-graph spectral clustering on the symmetrized Pubmed graph"""

    def test_spectral_clustering_rate(self):
        loaded = load_edge_list(EDGES)
        truth = load_labels(LABELS, id_map=loaded.id_map)
        result = full_spectral_clustering(loaded.graph, truth.num_blocks, seed=0)
        rate, _ = misclustering_rate(result.labels, truth.labels, truth.num_blocks)
        assert rate == pytest.approx(0.3303, abs=0.015)
