"""Synthetic dataset generator and run configuration parsing."""

import numpy as np
import pytest

from fedhin.config import ConfigError, RunConfig, parse_config
from fedhin.graph import Hin, partition
from fedhin.synth import PRIVATE_EDGE_TYPES, SynthSpec, gen_synth, parse_spec


class TestSynth:
    def test_byte_identical_under_fixed_seed(self, tmp_path):
        spec = SynthSpec(num_users=20, num_items=15, num_blocks=3, seed=5)
        n1, e1 = gen_synth(spec, tmp_path / "a")
        n2, e2 = gen_synth(spec, tmp_path / "b")
        assert open(n1, "rb").read() == open(n2, "rb").read()
        assert open(e1, "rb").read() == open(e2, "rb").read()

    def test_different_seeds_differ(self, tmp_path):
        base = dict(num_users=20, num_items=15, num_blocks=3)
        _, e1 = gen_synth(SynthSpec(seed=0, **base), tmp_path / "a")
        _, e2 = gen_synth(SynthSpec(seed=1, **base), tmp_path / "b")
        assert open(e1, "rb").read() != open(e2, "rb").read()

    def test_node_and_attribute_counts(self, synth_dir, synth_hin):
        assert synth_hin.num_nodes == 200 + 100 + 10
        assert len(synth_hin.nodes_of_type("U")) == 200
        assert len(synth_hin.nodes_of_type("B")) == 100
        assert len(synth_hin.nodes_of_type("C")) == 10

    def test_every_item_belongs_to_one_block(self, synth_hin):
        belongs = synth_hin.edge_type_id("belongs")
        for item in synth_hin.nodes_of_type("B"):
            assert len(synth_hin.neighbors(item, belongs)) == 1

    def test_planted_structure_dominates_interactions(self, synth_hin):
        # most interactions should land inside a user's preferred blocks;
        # with intra=0.2 and inter=0.01 the intra share is well above half
        views, shared = partition(synth_hin)
        belongs = synth_hin.edge_type_id("belongs")
        block = np.array([next(iter(synth_hin.neighbors(i, belongs)))
                          for i in shared.item_nodes])
        intra = total = 0
        for view in views:
            pos = np.flatnonzero(view.bits)
            if len(pos) < 2:
                continue
            blocks, counts = np.unique(block[pos], return_counts=True)
            intra += counts[counts > 1].sum()
            total += len(pos)
        assert intra / total > 0.6

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SynthSpec(intra=0.1, inter=0.2)
        with pytest.raises(ValueError):
            SynthSpec(num_items=0)

    def test_parse_spec_round_trip(self, tmp_path):
        path = tmp_path / "spec"
        path.write_text("# comment\nnum_users=7\nintra=0.5\ninter=0.1\n")
        spec = parse_spec(path)
        assert spec.num_users == 7
        assert spec.intra == 0.5

    def test_parse_spec_unknown_key(self, tmp_path):
        path = tmp_path / "spec"
        path.write_text("num_userz=7\n")
        with pytest.raises(ValueError, match="unknown key"):
            parse_spec(path)


class TestRunConfig:
    def test_defaults_are_valid(self):
        config = RunConfig()
        assert config.eps1 == 1.0 and config.eps2 == 1.0
        assert config.user_paths == ["U-B-U"]
        assert config.item_paths == ["B-U-B"]

    def test_multiple_paths_split_on_commas(self):
        config = RunConfig(meta_paths_item="B-U-B, B-C-B")
        assert config.item_paths == ["B-U-B", "B-C-B"]

    def test_rejects_nonpositive_budget(self):
        with pytest.raises(ConfigError):
            RunConfig(eps1=0.0)

    def test_rejects_unknown_mode(self):
        with pytest.raises(ConfigError):
            RunConfig(mode="other")

    def test_rejects_empty_path_list(self):
        with pytest.raises(ConfigError):
            RunConfig(meta_paths_user=", ,")


class TestParseConfig:
    def test_parses_known_keys(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("# run\neps1 = 2.0\nrounds=50\nmeta_paths_item=B-U-B,B-C-B\n")
        config = parse_config(path)
        assert config.eps1 == 2.0
        assert config.rounds == 50
        assert config.item_paths == ["B-U-B", "B-C-B"]

    def test_unknown_key_reports_line(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("eps1=1.0\nbogus=3\n")
        with pytest.raises(ConfigError, match=":2: unknown key"):
            parse_config(path)

    def test_bad_type_reports_line(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("rounds=many\n")
        with pytest.raises(ConfigError, match="expects int"):
            parse_config(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("just a line\n")
        with pytest.raises(ConfigError, match="key=value"):
            parse_config(path)
