import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyapnet.activations import relu, tanh
from lyapnet.errors import ConfigError
from lyapnet.generators import (
    GeneratorConfig,
    count_nonzero,
    delay_embed,
    embed_input,
    generate,
    kept_per_row,
    prune,
    prune_matrix,
)
from lyapnet.network import dumps, forward


def cfg(**kw):
    base = dict(width_D=6, depth_N=4, weight_scale_s=1.0, activation=tanh(1.0), seed=0)
    base.update(kw)
    return GeneratorConfig(**base)


@given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.1, 1.0), norm=st.sampled_from(["none", "column_sum1"]))
def test_same_config_same_bytes(seed, p, norm):
    c = cfg(seed=seed, connectivity_p=p, normalization=norm)
    assert dumps(generate(c)) == dumps(generate(c))


def test_different_seeds_differ():
    assert generate(cfg(seed=1)) != generate(cfg(seed=2))


@given(seed=st.integers(0, 10_000), p=st.floats(0.05, 1.0), D=st.integers(1, 40))
def test_column_sum1_exact(seed, p, D):
    net = generate(cfg(width_D=D, connectivity_p=p, normalization="column_sum1", seed=seed))
    for layer in net.layers:
        np.testing.assert_allclose(layer.weights.sum(axis=0), 1.0, atol=1e-12)


def test_zero_scale_relu_dies_after_first_layer():
    net = generate(cfg(weight_scale_s=0.0, activation=relu()))
    assert all(np.all(layer.weights == 0) for layer in net.layers)
    traj = forward(net, np.arange(6.0))
    for s in traj.states[1:]:
        np.testing.assert_array_equal(s, 0.0)


def test_sparsity_concentrates():
    net = generate(cfg(width_D=64, connectivity_p=0.25, seed=17))
    frac = np.mean([np.mean(layer.weights != 0) for layer in net.layers])
    assert 0.20 <= frac <= 0.30


def test_orthogonal_init():
    net = generate(cfg(init="orthogonal", weight_scale_s=1.0))
    for layer in net.layers:
        np.testing.assert_allclose(layer.weights.T @ layer.weights, np.eye(6), atol=1e-12)


@pytest.mark.parametrize(
    "bad",
    [
        dict(width_D=0),
        dict(depth_N=1),
        dict(connectivity_p=0.0),
        dict(connectivity_p=1.5),
        dict(weight_scale_s=-1.0),
        dict(normalization="rows"),
        dict(update_form="leapfrog"),
        dict(init="xavier"),
        dict(prune_fraction=1.0),
    ],
)
def test_invalid_config(bad):
    with pytest.raises(ConfigError):
        cfg(**bad)


def test_config_dict_roundtrip():
    c = cfg(normalization="column_sum1", connectivity_p=0.5, delay_embed=True)
    assert GeneratorConfig.from_dict(c.to_dict()) == c
    assert GeneratorConfig.from_dict(dict(c.to_dict(), activation="tanh:1")) == c
    with pytest.raises(ConfigError):
        GeneratorConfig.from_dict(dict(c.to_dict(), colour=1))


# -- delay embedding ---------------------------------------------------------


@given(seed=st.integers(0, 10_000))
def test_delay_embedding_records_previous_state(seed):
    net = generate(cfg(seed=seed))
    y0 = np.random.default_rng(seed).normal(size=6)
    base = forward(net, y0)
    emb = forward(delay_embed(net), embed_input(y0))
    for q, s in enumerate(emb.states):
        # the wider matmul may sum in a different order
        np.testing.assert_allclose(s[:6], base.states[q], rtol=1e-13, atol=1e-14)
        if q >= 1:
            np.testing.assert_array_equal(s[6:], emb.states[q - 1][:6])


def test_delay_embedding_width_and_sparsity():
    net = generate(cfg(width_D=5))
    emb = delay_embed(net)
    assert emb.widths == [10] * 4
    for nnz in count_nonzero(emb):
        assert nnz <= 5 * 5 + 5 < 4 * 25


def test_delay_embed_flag_in_config():
    assert generate(cfg(delay_embed=True)) == delay_embed(generate(cfg()))


def test_delay_feedback_changes_y():
    net = generate(cfg())
    y0 = np.ones(6)
    fed = forward(delay_embed(net, feedback=0.3 * np.eye(6)), embed_input(y0, y0))
    plain = forward(net, y0)
    assert not np.allclose(fed.final[:6], plain.final)


# -- pruning -----------------------------------------------------------------


def test_prune_row_example():
    np.testing.assert_array_equal(prune_matrix([[3.0, -1.0, 2.0, 0.5]], 0.5), [[3.0, 0.0, 2.0, 0.0]])


def test_prune_zero_is_identity():
    net = generate(cfg())
    assert prune(net, 0.0) is net


@given(f=st.floats(0.0, 0.99), D=st.integers(1, 20))
def test_prune_row_counts(f, D):
    net = generate(cfg(width_D=D, depth_N=2))
    pruned = prune(net, f)
    k = kept_per_row(D, f)
    assert k == math.ceil((1 - f) * D - 1e-9)
    np.testing.assert_array_equal((pruned.layers[0].weights != 0).sum(axis=1), k)


def test_prune_keeps_largest():
    net = generate(cfg(width_D=8))
    pruned = prune(net, 0.75)
    for a, b in zip(net.layers, pruned.layers):
        for row, prow in zip(a.weights, b.weights):
            kept = np.abs(row[prow != 0])
            dropped = np.abs(row[prow == 0])
            assert kept.min() >= dropped.max()


def test_prune_ignores_seed():
    net = generate(cfg())
    assert prune(net, 0.5, seed=1) == prune(net, 0.5, seed=2)


def test_prune_tie_break_by_column():
    np.testing.assert_array_equal(prune_matrix([[1.0, -1.0, 1.0, 1.0]], 0.5), [[0.0, 0.0, 1.0, 1.0]])
