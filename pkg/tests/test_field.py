"""Keyed clock field: determinism, distributional laws, canonicalization
and agreement between the reference and compiled hash chains."""

import math

import numpy as np
import pytest

from convfpp import (
    ClockKey,
    ClockKind,
    ConfigurationError,
    ModelParams,
    PathError,
    RandomField,
    Topology,
    Truncation,
    ks_exponential,
    path_time,
    sample_clock,
)
from convfpp import field as field_mod
from convfpp import _fast
from convfpp.model import TREE_ROOT, tree_child


def lattice_params(lam=1.0, rho=0.5, d=2, trunc=None):
    return ModelParams(d=d, lam=lam, rho=rho, topology=Topology.LATTICE,
                       truncation=trunc)


def tree_params(lam=1.0, rho=0.5, d=3):
    return ModelParams(d=d, lam=lam, rho=rho, topology=Topology.TREE)


class TestDeterminism:
    def test_same_key_same_value(self):
        f1 = RandomField(lattice_params(), 42, 7)
        f2 = RandomField(lattice_params(), 42, 7)
        key = ClockKey(ClockKind.T1, (3, -2), (4, -2))
        assert sample_clock(f1, key) == sample_clock(f2, key)

    def test_trials_are_independent_streams(self):
        f1 = RandomField(lattice_params(), 42, 0)
        f2 = RandomField(lattice_params(), 42, 1)
        key = ClockKey(ClockKind.T1, (0, 0), (1, 0))
        assert sample_clock(f1, key) != sample_clock(f2, key)

    def test_seeds_are_independent_streams(self):
        f1 = RandomField(lattice_params(), 1, 0)
        f2 = RandomField(lattice_params(), 2, 0)
        key = ClockKey(ClockKind.CONV, (0, 0))
        assert sample_clock(f1, key) != sample_clock(f2, key)

    def test_kinds_share_edge_but_differ(self):
        f = RandomField(lattice_params(), 3, 0)
        t1 = sample_clock(f, ClockKey(ClockKind.T1, (0, 0), (1, 0)))
        t2 = sample_clock(f, ClockKey(ClockKind.T2, (0, 0), (1, 0)))
        t3 = sample_clock(f, ClockKey(ClockKind.T3, (0, 0), (1, 0)))
        assert len({t1, t2, t3}) == 3


class TestCompiledChainAgreement:
    """The pure-python hash chain and the compiled one must be bitwise equal."""

    def test_field_base(self):
        f = RandomField(lattice_params(), 123456789, 42)
        assert f.base == int(_fast.field_base(np.uint64(123456789), np.uint64(42)))

    def test_tree_states(self):
        f = RandomField(tree_params(), 9, 1)
        root = f.tree_root_state()
        assert root == int(_fast.tree_root_state(np.uint64(f.base)))
        for lab in range(3):
            assert (f.tree_child_state(root, lab)
                    == int(_fast.child_state(np.uint64(root), np.uint64(lab))))

    def test_lattice_states(self):
        f = RandomField(lattice_params(d=3), 5, 0)
        for coords in [(0, 0, 0), (7, -3, 2), (-11, 11, -1)]:
            arr = np.array(coords, dtype=np.int64)
            assert (f.lattice_site_state(coords)
                    == int(_fast.lattice_site_state(np.uint64(f.base), arr)))

    def test_edge_clock_values(self):
        f = RandomField(lattice_params(lam=0.7, rho=0.2), 5, 3)
        x, y = (2, -1), (2, 0)
        es = f.lattice_edge_state(x, y)
        for kind, rate in [(ClockKind.T1, 1.0), (ClockKind.T2, 0.7),
                           (ClockKind.T3, 0.7)]:
            h = _fast.state_hash(np.uint64(es), np.uint64(_fast.KIND_TAGS[kind]))
            assert f.lattice_edge_clock(kind, x, y) == float(
                _fast.exp_from_u64(h, rate))


class TestCanonicalization:
    def test_lattice_edge_is_undirected(self):
        f = RandomField(lattice_params(), 0, 0)
        for kind in (ClockKind.T1, ClockKind.T2, ClockKind.T3):
            a = f.lattice_edge_clock(kind, (4, 4), (4, 5))
            b = f.lattice_edge_clock(kind, (4, 5), (4, 4))
            assert a == b

    def test_axes_get_distinct_clocks(self):
        f = RandomField(lattice_params(), 0, 0)
        right = f.lattice_edge_clock(ClockKind.T1, (0, 0), (1, 0))
        up = f.lattice_edge_clock(ClockKind.T1, (0, 0), (0, 1))
        assert right != up

    def test_parallel_edges_distinct(self):
        f = RandomField(lattice_params(), 0, 0)
        a = f.lattice_edge_clock(ClockKind.T1, (0, 0), (1, 0))
        b = f.lattice_edge_clock(ClockKind.T1, (1, 0), (2, 0))
        assert a != b

    def test_non_neighbors_rejected(self):
        f = RandomField(lattice_params(), 0, 0)
        with pytest.raises(PathError):
            f.lattice_edge_clock(ClockKind.T1, (0, 0), (1, 1))
        with pytest.raises(PathError):
            f.lattice_edge_clock(ClockKind.T1, (0, 0), (2, 0))

    def test_tree_edge_keyed_by_deeper_endpoint(self):
        f = RandomField(tree_params(), 0, 0)
        child = tree_child(TREE_ROOT, 3, 1)
        via_key = sample_clock(f, ClockKey(ClockKind.TU, TREE_ROOT, child))
        via_key_rev = sample_clock(f, ClockKey(ClockKind.TU, child, TREE_ROOT))
        assert via_key == via_key_rev == f.tree_edge_clock(ClockKind.TU, child)


class TestKindValidity:
    def test_tree_kinds_on_lattice_rejected(self):
        f = RandomField(lattice_params(), 0, 0)
        with pytest.raises(ConfigurationError):
            sample_clock(f, ClockKey(ClockKind.TU, (0, 0), (1, 0)))

    def test_lattice_kinds_on_tree_rejected(self):
        f = RandomField(tree_params(), 0, 0)
        child = tree_child(TREE_ROOT, 3, 0)
        with pytest.raises(ConfigurationError):
            sample_clock(f, ClockKey(ClockKind.T2, TREE_ROOT, child))

    def test_conversion_key_shape(self):
        f = RandomField(lattice_params(), 0, 0)
        with pytest.raises(ConfigurationError):
            sample_clock(f, ClockKey(ClockKind.CONV, (0, 0), (1, 0)))
        with pytest.raises(ConfigurationError):
            sample_clock(f, ClockKey(ClockKind.T1, (0, 0)))

    def test_zero_rate_gives_infinite_clock(self):
        f = RandomField(lattice_params(rho=0.0), 0, 0)
        assert math.isinf(f.conv_clock((0, 0)))


class TestClockLaws:
    N = 20000

    def _axis_samples(self, field, kind):
        return np.array([
            field.lattice_edge_clock(kind, (j, 0), (j + 1, 0))
            for j in range(self.N)])

    @pytest.mark.parametrize("kind,rate,lam,rho", [
        (ClockKind.T1, 1.0, 1.0, 0.5),
        (ClockKind.T2, 0.3, 0.3, 0.5),
        (ClockKind.T3, 2.0, 2.0, 0.5),
    ])
    def test_edge_clock_exponential(self, kind, rate, lam, rho):
        f = RandomField(lattice_params(lam=lam, rho=rho), 11, 0)
        stat, pvalue = ks_exponential(self._axis_samples(f, kind), rate)
        assert pvalue > 1e-3

    def test_conversion_clock_exponential(self):
        f = RandomField(lattice_params(rho=0.25), 11, 0)
        samples = np.array([f.conv_clock((j, 1)) for j in range(self.N)])
        stat, pvalue = ks_exponential(samples, 0.25)
        assert pvalue > 1e-3

    def test_tree_clock_exponential(self):
        f = RandomField(tree_params(lam=1.5), 11, 0)
        state = f.tree_root_state()
        samples = []
        for _ in range(self.N):
            state = f.tree_child_state(state, 0)
            samples.append(f.state_clock(state, ClockKind.TD))
        stat, pvalue = ks_exponential(np.array(samples), 1.5)
        assert pvalue > 1e-3

    def test_adjacent_edges_uncorrelated(self):
        f = RandomField(lattice_params(), 11, 0)
        xs = self._axis_samples(f, ClockKind.T1)
        r = np.corrcoef(xs[:-1], xs[1:])[0, 1]
        assert abs(r) < 0.03

    def test_kinds_on_one_edge_uncorrelated(self):
        f = RandomField(lattice_params(), 11, 0)
        xs = self._axis_samples(f, ClockKind.T1)
        ys = self._axis_samples(f, ClockKind.T2)
        r = np.corrcoef(xs, ys)[0, 1]
        assert abs(r) < 0.03


class TestTruncation:
    def test_full_truncation_censors_above_threshold(self):
        plain = RandomField(lattice_params(), 7, 0)
        trunc = RandomField(lattice_params(trunc=Truncation(q=1.0, K=0.5)), 7, 0)
        n_inf = 0
        for j in range(2000):
            x, y = (j, 0), (j + 1, 0)
            base_value = plain.lattice_edge_clock(ClockKind.T1, x, y)
            value = trunc.lattice_edge_clock(ClockKind.T1, x, y)
            if base_value > 0.5:
                assert math.isinf(value)
                n_inf += 1
            else:
                assert value == base_value
        assert 0 < n_inf < 2000

    def test_zero_truncation_is_plain_field(self):
        plain = RandomField(lattice_params(), 7, 0)
        trunc = RandomField(lattice_params(trunc=Truncation(q=0.0, K=0.5)), 7, 0)
        for j in range(500):
            x, y = (j, 0), (j + 1, 0)
            assert (trunc.lattice_edge_clock(ClockKind.T1, x, y)
                    == plain.lattice_edge_clock(ClockKind.T1, x, y))

    def test_partial_marking_rate(self):
        q, K = 0.5, 1e-9
        trunc = RandomField(lattice_params(trunc=Truncation(q=q, K=K)), 7, 0)
        vals = [trunc.lattice_edge_clock(ClockKind.T1, (j, 0), (j + 1, 0))
                for j in range(20000)]
        frac_inf = np.mean([math.isinf(v) for v in vals])
        # a tiny K censors every marked edge, so the infinite fraction is q
        assert abs(frac_inf - q) < 0.02

    def test_other_kinds_not_truncated(self):
        trunc = RandomField(lattice_params(trunc=Truncation(q=1.0, K=1e-9)), 7, 0)
        assert math.isinf(trunc.lattice_edge_clock(ClockKind.T1, (0, 0), (1, 0)))
        assert math.isfinite(trunc.lattice_edge_clock(ClockKind.T2, (0, 0), (1, 0)))


class TestPathTime:
    def test_sum_of_edges(self):
        f = RandomField(lattice_params(), 1, 0)
        path = [(0, 0), (1, 0), (1, 1), (1, 2)]
        expected = sum(
            f.lattice_edge_clock(ClockKind.T1, a, b)
            for a, b in zip(path, path[1:]))
        assert path_time(f, path, ClockKind.T1) == pytest.approx(expected)

    def test_tree_path(self):
        f = RandomField(tree_params(), 1, 0)
        a = tree_child(TREE_ROOT, 3, 2)
        b = tree_child(a, 3, 0)
        expected = (f.tree_edge_clock(ClockKind.T1, a)
                    + f.tree_edge_clock(ClockKind.T1, b))
        assert path_time(f, [TREE_ROOT, a, b], ClockKind.T1) == pytest.approx(expected)

    def test_bad_path_raises(self):
        f = RandomField(lattice_params(), 1, 0)
        with pytest.raises(PathError):
            path_time(f, [(0, 0), (2, 0)], ClockKind.T1)
