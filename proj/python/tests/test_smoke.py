import json
import os
from pathlib import Path

import numpy as np
import pytest

import claimgraph

DATA = Path(os.environ.get("CLAIMGRAPH_DATA_DIR", Path(__file__).resolve().parents[2] / "data" / "synth_1k"))


def test_cosine_and_welch():
    assert claimgraph.cosine([1.0, 0.0], [0.0, 1.0]) == 0.0
    t, df, p = claimgraph.welch_t([1, 2, 3], [4, 5, 6])
    assert t == pytest.approx(-3.6742346, rel=1e-7)
    assert df == pytest.approx(4.0)
    assert p == pytest.approx(0.0213116, rel=1e-5)


def test_config_validation():
    cfg = claimgraph.default_config()
    assert cfg["edge_threshold"] == 0.875
    assert set(claimgraph.config_keys()) <= set(cfg)
    with pytest.raises(claimgraph.ConfigError, match="alpha"):
        claimgraph.validate_config({"alpha": 1.5})
    assert issubclass(claimgraph.ConfigError, claimgraph.ClaimgraphError)


def test_vector_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    m = rng.normal(size=(20, 8)).astype(np.float32)
    ids = list(range(100, 120))
    claimgraph.write_vectors(tmp_path / "v.cgv", ids, m)
    back_ids, back = claimgraph.load_vectors(tmp_path / "v.cgv")
    assert back_ids == ids
    np.testing.assert_allclose(back, m / np.linalg.norm(m, axis=1, keepdims=True), rtol=1e-6)
    with pytest.raises(claimgraph.ClaimgraphError):
        claimgraph.write_vectors(tmp_path / "bad.cgv", [1, 1], m[:2])


def test_synthetic_clusters_recovered():
    corpus = claimgraph.generate_synthetic({"n_clusters": 80, "seed": 5})
    assert len(corpus["records"]) == len(corpus["ids"]) == corpus["vectors"].shape[0]
    clusters = claimgraph.threshold_clusters(corpus["ids"], corpus["vectors"], 0.875, exact=True)
    label = {}
    for c, members in enumerate(clusters):
        for rid in members:
            label[rid] = c
    found = [label[rid] for rid in corpus["ids"]]
    assert claimgraph.adjusted_rand_index(found, corpus["truth"]) == pytest.approx(1.0)


def test_pipeline_on_bundled_corpus(tmp_path):
    outcomes = claimgraph.run_all(tmp_path, input=DATA / "records.jsonl", vectors=DATA / "vectors.cgv")
    assert [o["stage"] for o in outcomes][0] == "ingest"
    assert not any(o["skipped"] for o in outcomes)
    stats = json.loads((tmp_path / "cluster_stats.json").read_text())
    assert stats["n_nodes"] > 0
    again = claimgraph.run_stage("cluster", tmp_path)
    assert again["skipped"]
    with pytest.raises(claimgraph.ClaimgraphError, match="unknown stage"):
        claimgraph.run_stage("nope", tmp_path)
