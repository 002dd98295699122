import torch

from makeupnet.attention import (
    ChannelAttention,
    MultiHeadAttention,
    SpatialAttention,
    sinusoidal_position_grid,
)

torch.manual_seed(0)


def test_channel_weights_in_open_unit_interval():
    ca = ChannelAttention(48, 16)
    for seed in range(5):
        g = torch.Generator().manual_seed(seed)
        style = torch.randn(2, 48, 8, 8, generator=g)
        w = ca(style)
        assert w.shape == (2, 48)
        assert torch.all(w > 0) and torch.all(w < 1)


def test_channel_weights_constant_for_zero_style():
    ca = ChannelAttention(48, 16)
    w1 = ca(torch.zeros(1, 48, 8, 8))
    w2 = ca(torch.zeros(1, 48, 16, 16))
    assert torch.allclose(w1, w2)


def test_channel_scaling_is_elementwise():
    ca = ChannelAttention(48, 16)
    style = torch.randn(1, 48, 8, 8)
    content = torch.randn(1, 48, 8, 8)
    w = ca(style)
    scaled = content * w[:, :, None, None]
    for c in (0, 13, 47):
        assert torch.allclose(scaled[0, c], content[0, c] * w[0, c])


def test_spatial_mask_range_and_constant_input():
    sa = SpatialAttention()
    mask = sa.mask(torch.randn(1, 48, 8, 8))
    assert torch.all(mask > 0) and torch.all(mask < 1)
    const = torch.full((1, 48, 8, 8), 0.37)
    out = sa(const)
    scale = out / const
    assert torch.allclose(scale, scale.flatten()[0].expand_as(scale), atol=1e-6)


def test_spatial_scaling_uniform_across_channels():
    sa = SpatialAttention()
    x = torch.randn(1, 48, 6, 6)
    x[x.abs() < 1e-3] = 1.0  # avoid divide-by-near-zero in the ratio check
    out = sa(x)
    ratio = out / x
    ref = ratio[:, :1]
    assert torch.allclose(ratio, ref.expand_as(ratio), atol=1e-5)


def test_attention_rows_sum_to_one():
    mha = MultiHeadAttention(48, 8)
    assert mha.heads == 8 and mha.head_dim == 6
    q = torch.randn(2, 10, 48)
    k = torch.randn(2, 16, 48)
    w = mha.attention_weights(q, k)
    assert w.shape == (2, 8, 10, 16)
    assert torch.allclose(w.sum(dim=-1), torch.ones(2, 8, 10), atol=1e-5)


def test_attention_key_value_permutation_equivariance():
    # permuting content tokens together with their positions leaves every
    # output token unchanged (4x4 grid of tokens)
    mha = MultiHeadAttention(48, 8)
    q = torch.randn(1, 16, 48)
    content = torch.randn(1, 16, 48)
    pos = sinusoidal_position_grid(4, 4, 48)
    perm = torch.randperm(16)
    out = mha(q, content + pos, content)
    out_perm = mha(q, (content + pos)[:, perm], content[:, perm])
    assert torch.allclose(out, out_perm, atol=1e-5)


def test_attention_values_carry_no_positions():
    # with identity projections and identical content tokens, the attended
    # output must equal that token exactly; any position term on V would
    # leak position-dependent variation into the output
    mha = MultiHeadAttention(48, 8)
    for proj in (mha.q_proj, mha.k_proj, mha.v_proj, mha.out_proj):
        with torch.no_grad():
            proj.weight.copy_(torch.eye(48))
            proj.bias.zero_()
    token = torch.randn(1, 1, 48)
    content = token.expand(1, 16, 48)
    pos = sinusoidal_position_grid(4, 4, 48)
    out = mha(torch.randn(1, 16, 48) + pos, content + pos, content)
    assert torch.allclose(out, token.expand(1, 16, 48), atol=1e-5)


def test_position_grid_row_column_split():
    pe = sinusoidal_position_grid(5, 7, 48)
    assert pe.shape == (1, 35, 48)
    grid = pe.reshape(5, 7, 48)
    # first half varies only with the row, second half only with the column
    assert torch.allclose(grid[2, 0, :24], grid[2, 6, :24])
    assert torch.allclose(grid[0, 3, 24:], grid[4, 3, 24:])
    assert not torch.allclose(grid[0, 0, :24], grid[1, 0, :24])
    assert not torch.allclose(grid[0, 0, 24:], grid[0, 1, 24:])
