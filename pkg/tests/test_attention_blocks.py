import math

import numpy as np
import pytest
import torch

from stdcformer.nn.attention import AxialSelfAttention, multi_head_attention
from stdcformer.nn.blocks import STDCBlock, deconf_gate


def t(arr):
    return torch.as_tensor(np.asarray(arr), dtype=torch.float64)


def brute_single_head_attention(h, wq, bq, wk, bk, wv, bv):
    """Reference attention over the rows of h [L, in_dim], one head."""
    q = h @ wq.T + bq
    k = h @ wk.T + bk
    v = h @ wv.T + bv
    d = q.shape[1]
    scores = q @ k.T / math.sqrt(d)
    scores -= scores.max(axis=1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights @ v


def attention_module(in_dim, d, heads, axis, seed=0):
    torch.manual_seed(seed)
    module = AxialSelfAttention(in_dim, d, heads, axis).double()
    return module


class TestAxialAttention:
    def test_zero_query_weights_give_uniform_attention(self):
        module = attention_module(2, 2, 1, "region")
        with torch.no_grad():
            module.q_map.weight.zero_()
            module.q_map.bias.zero_()
        rng = np.random.default_rng(0)
        h = t(rng.normal(size=(1, 1, 5, 2)))
        out = module(h)
        v = module.v_map(h)
        expected = v.mean(dim=2, keepdim=True).expand_as(v)
        assert torch.allclose(out, expected, atol=1e-12)

    def test_single_region_output_equals_value(self):
        module = attention_module(3, 2, 1, "region")
        h = t(np.random.default_rng(1).normal(size=(2, 4, 1, 3)))
        assert torch.allclose(module(h), module.v_map(h), atol=1e-12)

    def test_single_timestep_output_equals_value(self):
        module = attention_module(3, 2, 1, "time")
        h = t(np.random.default_rng(2).normal(size=(2, 1, 4, 3)))
        assert torch.allclose(module(h), module.v_map(h), atol=1e-12)

    def test_two_region_scalar_hand_case(self):
        # n=2, d=1, one head: softmax([q_i k_1, q_i k_2]) blended values
        module = attention_module(1, 1, 1, "region")
        wq, bq = np.array([[1.5]]), np.array([0.1])
        wk, bk = np.array([[-0.5]]), np.array([0.2])
        wv, bv = np.array([[2.0]]), np.array([-0.3])
        with torch.no_grad():
            module.q_map.weight.copy_(t(wq)); module.q_map.bias.copy_(t(bq))
            module.k_map.weight.copy_(t(wk)); module.k_map.bias.copy_(t(bk))
            module.v_map.weight.copy_(t(wv)); module.v_map.bias.copy_(t(bv))
        h_rows = np.array([[0.7], [-1.2]])
        expected = brute_single_head_attention(h_rows, wq, bq, wk, bk, wv, bv)
        out = module(t(h_rows[None, None]))
        assert out[0, 0].detach().numpy() == pytest.approx(expected, abs=1e-12)

    def test_temporal_matches_brute_oracle_per_region(self):
        module = attention_module(3, 2, 1, "time", seed=5)
        rng = np.random.default_rng(3)
        h = rng.normal(size=(1, 4, 2, 3))
        out = module(t(h))
        weights = {
            name: getattr(module, name).weight.detach().numpy()
            for name in ("q_map", "k_map", "v_map")
        }
        biases = {
            name: getattr(module, name).bias.detach().numpy()
            for name in ("q_map", "k_map", "v_map")
        }
        for region in range(2):
            expected = brute_single_head_attention(
                h[0, :, region], weights["q_map"], biases["q_map"],
                weights["k_map"], biases["k_map"], weights["v_map"], biases["v_map"],
            )
            assert out[0, :, region].detach().numpy() == pytest.approx(expected, abs=1e-12)

    def test_rows_stochastic_multi_head(self):
        rng = np.random.default_rng(4)
        for heads in (1, 2, 4):
            q = t(rng.normal(size=(2, 3, 5, 4)))
            k = t(rng.normal(size=(2, 3, 5, 4)))
            v = t(rng.normal(size=(2, 3, 5, 4)))
            _, attn = multi_head_attention(q, k, v, heads)
            sums = attn.sum(dim=-1)
            assert torch.allclose(sums, torch.ones_like(sums), atol=1e-6)
            assert torch.all(attn >= 0) and torch.all(attn <= 1)

    def test_head_count_must_divide_dim(self):
        with pytest.raises(ValueError, match="divisible"):
            AxialSelfAttention(4, 6, 4, "region")

    def test_multi_head_concat_width(self):
        module = attention_module(4, 8, 4, "region")
        out = module(t(np.random.default_rng(5).normal(size=(1, 2, 3, 4))))
        assert out.shape == (1, 2, 3, 8)


class TestDeconfGate:
    def test_zero_confounders_give_half(self):
        h_s = t(np.ones((1, 2, 3, 4)))
        h_t = t(3 * np.ones((1, 2, 3, 4)))
        p, fused = deconf_gate(h_s, h_t, t(np.zeros((3, 4))), t(np.zeros((1, 2, 4))))
        assert torch.all(p == 0.5)
        assert torch.allclose(fused, (h_s + h_t) / 2)

    def test_log_three_gives_three_quarters(self):
        # logistic(ln 3) = 3/4 -> fused = 0.75 h_s + 0.25 h_t
        rng = np.random.default_rng(6)
        h_s = t(rng.normal(size=(1, 1, 2, 2)))
        h_t = t(rng.normal(size=(1, 1, 2, 2)))
        c_s = t(np.full((2, 2), math.log(3.0)))
        c_t = t(np.zeros((1, 1, 2)))
        p, fused = deconf_gate(h_s, h_t, c_s, c_t)
        assert torch.allclose(p, torch.full_like(p, 0.75))
        assert torch.allclose(fused, 0.75 * h_s + 0.25 * h_t, atol=1e-12)

    def test_saturation_selects_spatial_branch(self):
        rng = np.random.default_rng(7)
        h_s = t(rng.normal(size=(1, 1, 2, 2)))
        h_t = t(rng.normal(size=(1, 1, 2, 2)))
        p, fused = deconf_gate(h_s, h_t, t(np.full((2, 2), 50.0)), t(np.zeros((1, 1, 2))))
        assert torch.allclose(fused, h_s, atol=1e-9)

    def test_complement_is_exact(self):
        rng = np.random.default_rng(8)
        h = t(rng.normal(size=(2, 3, 4, 5)))
        c_s = t(rng.normal(size=(4, 5)))
        c_t = t(rng.normal(size=(2, 3, 5)))
        p, _ = deconf_gate(h, h, c_s, c_t)
        assert torch.all(p + (1.0 - p) == 1.0)

    def test_disabled_gate_fixed_at_half(self):
        rng = np.random.default_rng(9)
        h_s = t(rng.normal(size=(1, 2, 2, 3)))
        h_t = t(rng.normal(size=(1, 2, 2, 3)))
        p, fused = deconf_gate(h_s, h_t, t(rng.normal(size=(2, 3))),
                               t(rng.normal(size=(1, 2, 3))), enabled=False)
        assert torch.all(p == 0.5)
        assert torch.allclose(fused, (h_s + h_t) / 2)


def block(in_dim=3, d=3, heads=1, **kw) -> STDCBlock:
    torch.manual_seed(0)
    return STDCBlock(in_dim, d, heads, **kw).double()


class TestSTDCBlock:
    def test_identity_path_with_zero_value_maps(self):
        # norm off, residual on, zero V maps: h_s = h_t = 0 -> output = h
        blk = block(layer_norm=False, residual=True)
        with torch.no_grad():
            blk.spatial_attn.v_map.weight.zero_()
            blk.spatial_attn.v_map.bias.zero_()
            blk.temporal_attn.v_map.weight.zero_()
            blk.temporal_attn.v_map.bias.zero_()
        rng = np.random.default_rng(10)
        h = t(rng.normal(size=(1, 2, 4, 3)))
        out = blk(h, t(rng.normal(size=(4, 3))), t(rng.normal(size=(1, 2, 3))))
        assert torch.allclose(out, h, atol=1e-12)

    def test_stacking_preserves_shape(self):
        rng = np.random.default_rng(11)
        h = t(rng.normal(size=(2, 3, 4, 6)))
        c_s = t(rng.normal(size=(4, 6)))
        c_t = t(rng.normal(size=(2, 3, 6)))
        blk = block(in_dim=6, d=6, heads=2)
        for _ in range(3):
            h = blk(h, c_s, c_t)
            assert h.shape == (2, 3, 4, 6)

    def test_first_block_takes_wider_input_without_residual(self):
        blk = block(in_dim=6, d=3, residual=True)
        assert blk.use_residual is False
        rng = np.random.default_rng(12)
        out = blk(t(rng.normal(size=(1, 2, 2, 6))), t(rng.normal(size=(2, 3))),
                  t(rng.normal(size=(1, 2, 3))))
        assert out.shape == (1, 2, 2, 3)

    def test_region_permutation_equivariance(self):
        blk = block(in_dim=4, d=4, heads=2)
        rng = np.random.default_rng(13)
        h = t(rng.normal(size=(1, 3, 5, 4)))
        c_s = t(rng.normal(size=(5, 4)))
        c_t = t(rng.normal(size=(1, 3, 4)))
        perm = torch.as_tensor(rng.permutation(5))
        base = blk(h, c_s, c_t)
        permuted = blk(h[:, :, perm], c_s[perm], c_t)
        assert torch.allclose(permuted, base[:, :, perm], atol=1e-10)

    def test_time_permutation_equivariance(self):
        blk = block(in_dim=4, d=4, heads=2)
        rng = np.random.default_rng(14)
        h = t(rng.normal(size=(1, 5, 3, 4)))
        c_s = t(rng.normal(size=(3, 4)))
        c_t = t(rng.normal(size=(1, 5, 4)))
        perm = torch.as_tensor(rng.permutation(5))
        base = blk(h, c_s, c_t)
        permuted = blk(h[:, perm], c_s, c_t[:, perm])
        assert torch.allclose(permuted, base[:, perm], atol=1e-10)

    def test_parameter_shapes_independent_of_sizes(self):
        blk = block(in_dim=4, d=4, heads=2)
        rng = np.random.default_rng(15)
        for steps, regions in ((2, 3), (5, 7)):
            out = blk(t(rng.normal(size=(1, steps, regions, 4))),
                      t(rng.normal(size=(regions, 4))),
                      t(rng.normal(size=(1, steps, 4))))
            assert out.shape == (1, steps, regions, 4)

    def test_gate_collected_in_diagnostics(self):
        blk = block(in_dim=3, d=3)
        rng = np.random.default_rng(16)
        collect = {"gates": [], "spatial_attention": [], "temporal_attention": []}
        blk(t(rng.normal(size=(1, 2, 2, 3))), t(rng.normal(size=(2, 3))),
            t(rng.normal(size=(1, 2, 3))), collect=collect)
        assert len(collect["gates"]) == 1
        assert collect["gates"][0].shape == (1, 2, 2, 3)
        assert collect["spatial_attention"][0].shape == (1, 2, 1, 2, 2)


def test_strict_block_matches_scalar_loop_oracle():
    from stdcformer.oracle import _block as oracle_block

    torch.manual_seed(3)
    blk = STDCBlock(3, 3, 1, layer_norm=False, residual=False).double()
    rng = np.random.default_rng(20)
    h = rng.normal(size=(2, 3, 3))
    c_s = rng.normal(size=(3, 3))
    c_t = rng.normal(size=(2, 3))
    out = blk(t(h[None]), t(c_s), t(c_t[None]))
    weights = {f"blk.{k}": v.detach().numpy().tolist()
               for k, v in blk.state_dict().items()}
    expected = oracle_block(h.tolist(), c_s.tolist(), c_t.tolist(), weights, "blk", 3)
    assert np.max(np.abs(out[0].detach().numpy() - np.asarray(expected))) < 1e-6
