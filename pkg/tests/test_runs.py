# -*- coding: utf-8 -*-

import numpy as np

from propclass import runs
from propclass.serializers import read_json


class TestSeeds:
    def test_derive_seed(self):
        seed = runs.derive_seed(7, "split")
        assert seed == runs.derive_seed(7, "split")
        assert 0 <= seed < 2 ** 63
        assert seed != runs.derive_seed(7, "dropout")
        assert seed != runs.derive_seed(8, "split")

    def test_rng_streams(self):
        first = runs.rng(3, "init").standard_normal(5)
        assert np.array_equal(first, runs.rng(3, "init").standard_normal(5))
        assert not np.array_equal(first, runs.rng(3, "shuffle").standard_normal(5))


class TestRunManifest:
    def test_write(self, tmp_path):
        out = str(tmp_path / "corpus.jsonl")
        manifest = runs.RunManifest("gen-corpus", dict(size=3), dict(taxonomy="tax.json"), dict(corpus=out), 7)
        path = manifest.write(out)
        assert path == out + ".manifest.json"
        data = read_json(path)
        assert data["subcommand"] == "gen-corpus"
        assert data["config"] == dict(size=3)
        assert data["seed"] == 7
        assert data["tool"] == "propclass/0.1.0"
        assert data["wall_time"] >= 0

    def test_manifest_path_of_directory(self):
        assert runs.manifest_path("runs/first/") == "runs/first.manifest.json"
