import pytest
import torch

from fdim.lib import msf
from fdim.lib import util as ut

def maps(widths, n=2, size=8, seed=0):
	g = torch.Generator().manual_seed(seed)
	return [torch.randn(n, c, size >> s, size >> s, generator=g, dtype=torch.float64) for s, c in enumerate(widths)]

def test_fused_vector_layout():
	H = maps([3, 5, 7])
	V = msf.msf_fuse(H, 3)
	assert V.shape == (2, 15)
	torch.testing.assert_close(V[:, 3:8], H[1].mean(dim=(2, 3)))

def test_fusion_ignores_spatial_order():
	H = maps([4, 6])
	perm = [h.flatten(2)[..., torch.randperm(h.shape[2] * h.shape[3])].view_as(h) for h in H]
	torch.testing.assert_close(msf.msf_fuse(perm), msf.msf_fuse(H))

def test_missing_scale():
	with pytest.raises(ut.ContractError):
		msf.msf_fuse(maps([4, 6]), 3)
	with pytest.raises(ut.ContractError):
		msf.msf_fuse([torch.zeros(1, 2, 2, 2), None])
	with pytest.raises(ut.ContractError):
		msf.MSF([4, 6])(maps([4]))

def test_disabled_attention_is_identity():
	m = msf.MSF([4, 6], use_attention=False)
	assert sum(p.numel() for p in m.parameters()) == 0
	H = maps([4, 6])
	V, refined = m(H)
	assert all(r is h for r, h in zip(refined, H))
	torch.testing.assert_close(V, msf.msf_fuse(H))

def test_attention_shapes_and_gates():
	torch.manual_seed(0)
	ca = msf.ChannelAttention(32, 16).double()
	assert ca.mlp[0].out_channels == 2
	x = maps([32], n=3)[0]
	gate = ca(x)
	assert gate.shape == (3, 32, 1, 1)
	assert gate.min() > 0 and gate.max() < 1
	sa = msf.SpatialAttention(7).double()
	assert sa(x).shape == (3, 1, 8, 8)
	assert msf.ChannelAttention(4, 16).mlp[0].out_channels == 1

def test_refined_map_of_zero_is_zero():
	torch.manual_seed(0)
	block = msf.AttentionRefine(8, reduction=4, kernel=3).double()
	H = torch.zeros(2, 8, 6, 6, dtype=torch.float64)
	assert torch.count_nonzero(block(H)) == 0

def test_refinement_only_attenuates():
	torch.manual_seed(0)
	block = msf.AttentionRefine(16, reduction=4, kernel=7).double()
	for seed in range(5):
		H = maps([16], n=2, size=12, seed=seed)[0]
		Hc = H * block.channel(H)
		Ht = block(H)
		torch.testing.assert_close(Ht, Hc * block.spatial(Hc))
		assert torch.all(Ht.abs() <= Hc.abs())
		assert torch.all(Hc.abs() <= H.abs())

def test_scales_do_not_share_parameters():
	m = msf.MSF([4, 4])
	assert m.refine[0].channel is not m.refine[1].channel
	assert m.dim == 8

def test_block_gradient():
	torch.manual_seed(1)
	m = msf.MSF([4, 6], reduction=2, kernel=3).double()
	H = [h.requires_grad_() for h in maps([4, 6], n=1, size=6, seed=2)]
	assert torch.autograd.gradcheck(lambda a, b: m([a, b])[0], tuple(H), eps=1e-6, atol=1e-7, rtol=1e-4)
