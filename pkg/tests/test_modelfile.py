import numpy as np
import pytest

import mrfattn as ma
from mrfattn.modelfile import (format_float, load_blockslot, load_instance,
                               load_pcn, parse_keyvalues, read_matrix,
                               read_vector, write_matrix)


class TestCsvRoundTrip:
    def test_doubles_survive_exactly(self, tmp_path):
        rng = ma.make_rng(100)
        a = rng.standard_normal((4, 3)) * np.exp(rng.standard_normal((4, 3)) * 8)
        path = tmp_path / "a.csv"
        write_matrix(path, a)
        b = read_matrix(path)
        np.testing.assert_array_equal(a, b)

    def test_format_uses_17_significant_digits(self):
        assert format_float(1 / 3) == "0.33333333333333331"
        assert format_float(1.0) == "1"

    def test_header_skipped_on_request(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("colA,colB\n1.0,2.0\n")
        with pytest.raises(ma.ValidationError):
            read_matrix(path)
        np.testing.assert_array_equal(read_matrix(path, header=True),
                                      [[1.0, 2.0]])

    def test_ragged_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ma.ValidationError, match="ragged"):
            read_matrix(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("\n")
        with pytest.raises(ma.ValidationError):
            read_matrix(path)

    def test_vector_accepts_row_or_column(self, tmp_path):
        row = tmp_path / "row.csv"
        row.write_text("1,2,3\n")
        col = tmp_path / "col.csv"
        col.write_text("1\n2\n3\n")
        np.testing.assert_array_equal(read_vector(row), [1, 2, 3])
        np.testing.assert_array_equal(read_vector(col), [1, 2, 3])
        square = tmp_path / "sq.csv"
        square.write_text("1,2\n3,4\n")
        with pytest.raises(ma.ValidationError):
            read_vector(square)


class TestKeyValues:
    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "s.txt"
        path.write_text("# heading\n\nkind=cross  # inline\nbeta=2.0\n")
        scalars, evs = parse_keyvalues(path)
        assert scalars == {"kind": "cross", "beta": "2.0"}
        assert evs == []

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "s.txt"
        path.write_text("kind=cross\nkind=self\n")
        with pytest.raises(ma.ValidationError, match="duplicate"):
            parse_keyvalues(path)

    def test_edge_var_repeats_collected(self, tmp_path):
        path = tmp_path / "s.txt"
        path.write_text("edge_var=0>1\nedge_var=1>0\n")
        _, evs = parse_keyvalues(path)
        assert evs == ["0>1", "1>0"]


class TestLoadInstance:
    def test_cross_instance(self, tmp_path):
        rng = ma.make_rng(101)
        keys = rng.standard_normal((4, 2))
        queries = rng.standard_normal((2, 2))
        write_matrix(tmp_path / "k.csv", keys)
        write_matrix(tmp_path / "q.csv", queries)
        (tmp_path / "inst.txt").write_text(
            "kind=cross\nkeys=k.csv\nqueries=q.csv\nbeta=1.5\n")
        mrf, values = load_instance(tmp_path / "inst.txt")
        assert mrf.n_edge_vars == 2
        assert mrf.beta == 1.5
        np.testing.assert_array_equal(values.w_v, np.eye(2))
        want = ma.cross_attention_mrf(keys, queries, np.eye(2), beta=1.5)
        np.testing.assert_allclose(ma.attend(mrf, values),
                                   ma.attend(want, values), atol=1e-15)

    def test_beta_auto_uses_dimension_scale(self, tmp_path):
        write_matrix(tmp_path / "x.csv", np.zeros((2, 4)))
        (tmp_path / "inst.txt").write_text(
            "kind=self\ninput=x.csv\nbeta=auto\n")
        mrf, _ = load_instance(tmp_path / "inst.txt")
        assert mrf.beta == pytest.approx(0.5)

    def test_custom_instance_with_masks(self, tmp_path):
        write_matrix(tmp_path / "obs.csv", np.array([[1.0], [2.0], [3.0]]))
        (tmp_path / "inst.txt").write_text(
            "kind=custom\nobserved=obs.csv\n"
            "edge_var=0>2@0.5,1>2@0.5,2>2@0.0\n"
            "edge_var=0>1\n")
        mrf, _ = load_instance(tmp_path / "inst.txt")
        assert mrf.n_edge_vars == 2
        ev = mrf.prior.edge_vars[0]
        assert ev.log_prior[2] == -np.inf
        post = ma.edge_posterior(mrf)
        assert post[0][2] == 0.0

    def test_custom_prior_must_sum_to_one(self, tmp_path):
        write_matrix(tmp_path / "obs.csv", np.array([[1.0], [2.0]]))
        (tmp_path / "inst.txt").write_text(
            "kind=custom\nobserved=obs.csv\nedge_var=0>1@0.5,1>0@0.6\n")
        with pytest.raises(ma.ValidationError, match="sum to 1"):
            load_instance(tmp_path / "inst.txt")

    def test_unknown_kind_rejected(self, tmp_path):
        (tmp_path / "inst.txt").write_text("kind=banana\n")
        with pytest.raises(ma.ValidationError, match="unknown kind"):
            load_instance(tmp_path / "inst.txt")

    def test_missing_required_key(self, tmp_path):
        write_matrix(tmp_path / "k.csv", np.zeros((1, 1)))
        (tmp_path / "inst.txt").write_text("kind=cross\nkeys=k.csv\n")
        with pytest.raises(ma.ValidationError, match="requires"):
            load_instance(tmp_path / "inst.txt")

    def test_missing_file_surfaces_as_oserror(self, tmp_path):
        (tmp_path / "inst.txt").write_text(
            "kind=cross\nkeys=k.csv\nqueries=q.csv\n")
        with pytest.raises(OSError):
            load_instance(tmp_path / "inst.txt")

    def test_slot_instance_seeded(self, tmp_path):
        rng = ma.make_rng(102)
        inputs = rng.standard_normal((5, 2))
        write_matrix(tmp_path / "x.csv", inputs)
        (tmp_path / "inst.txt").write_text(
            "kind=slot\ninputs=x.csv\nnum_slots=2\nseed=7\n")
        mrf, _ = load_instance(tmp_path / "inst.txt")
        np.testing.assert_array_equal(mrf.nodes.latent,
                                      ma.init_slots(inputs, 2, 7))

    def test_hopfield_instance(self, tmp_path):
        rng = ma.make_rng(103)
        write_matrix(tmp_path / "p.csv", rng.standard_normal((3, 2)))
        write_matrix(tmp_path / "q.csv", rng.standard_normal((1, 2)))
        (tmp_path / "inst.txt").write_text(
            "kind=hopfield\npatterns=p.csv\nquery=q.csv\n")
        mrf, _ = load_instance(tmp_path / "inst.txt")
        assert mrf.nodes.n_lat == 1 and mrf.n_edge_vars == 1


class TestLoadPcn:
    def test_network_and_overrides(self, tmp_path):
        rng = ma.make_rng(104)
        w1 = rng.standard_normal((3, 4))
        w2 = rng.standard_normal((2, 3))
        write_matrix(tmp_path / "w1.csv", w1)
        write_matrix(tmp_path / "w2.csv", w2)
        write_matrix(tmp_path / "k1.csv", np.array([[2.0, 2.0, 2.0]]))
        write_matrix(tmp_path / "z1.csv", np.array([[0.1, 0.2, 0.3]]))
        (tmp_path / "net.txt").write_text(
            "layers=4,3,2\nmode=dense-baseline\nbeta=1.0\n"
            "weights1=w1.csv\nweights2=w2.csv\n"
            "precisions1=k1.csv\nprecisions2=3.5\ninit1=z1.csv\n")
        net = load_pcn(tmp_path / "net.txt")
        assert net.mode == "dense-baseline"
        np.testing.assert_array_equal(net.layers[1].weights, w1)
        np.testing.assert_array_equal(net.layers[1].precisions, [2, 2, 2])
        np.testing.assert_array_equal(net.layers[2].precisions, [3.5, 3.5])
        np.testing.assert_array_equal(net.layers[1].values, [0.1, 0.2, 0.3])

    def test_missing_weights_rejected(self, tmp_path):
        (tmp_path / "net.txt").write_text("layers=2,2\n")
        with pytest.raises(ma.ValidationError, match="weights1"):
            load_pcn(tmp_path / "net.txt")


class TestLoadBlockSlot:
    def test_config_assembles(self, tmp_path):
        rng = ma.make_rng(105)
        write_matrix(tmp_path / "x.csv", rng.standard_normal((4, 3)))
        write_matrix(tmp_path / "m1.csv", rng.standard_normal((2, 2)))
        write_matrix(tmp_path / "m2.csv", rng.standard_normal((3, 1)))
        (tmp_path / "bs.txt").write_text(
            "inputs=x.csv\nnum_slots=2\nblocks=2,1\n"
            "memories1=m1.csv\nmemories2=m2.csv\nseed=1\ntol=1e-9\n"
            "max_iter=55\n")
        cfg, tol, max_iter = load_blockslot(tmp_path / "bs.txt")
        assert cfg.num_slots == 2
        assert [m.shape for m in cfg.memories] == [(2, 2), (3, 1)]
        assert tol == 1e-9 and max_iter == 55

    def test_block_width_mismatch_rejected(self, tmp_path):
        rng = ma.make_rng(106)
        write_matrix(tmp_path / "x.csv", rng.standard_normal((2, 3)))
        write_matrix(tmp_path / "m1.csv", rng.standard_normal((2, 3)))
        (tmp_path / "bs.txt").write_text(
            "inputs=x.csv\nnum_slots=1\nblocks=2,1\nmemories1=m1.csv\n")
        with pytest.raises(ma.ValidationError, match="block dim"):
            load_blockslot(tmp_path / "bs.txt")
