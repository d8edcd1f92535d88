## Multi-scale fusion: channel then spatial attention on each scale's aggregated map,
# global average pooling per scale and concatenation from the finest to the coarsest scale.

from fdim.lib import util as ut
import torch
import torch.nn as nn

class ChannelAttention(nn.Module):
	""" Gate from a shared bottleneck MLP applied to the average- and max-pooled channel descriptors """
	def __init__(self, channels, reduction=16):
		super().__init__()
		hidden = max(channels // reduction, 1)
		self.mlp = nn.Sequential(
			nn.Conv2d(channels, hidden, 1, bias=False),
			nn.ReLU(inplace=True),
			nn.Conv2d(hidden, channels, 1, bias=False))

	def forward(self, x):
		avg = torch.mean(x, dim=(2, 3), keepdim=True)
		mx = torch.amax(x, dim=(2, 3), keepdim=True)
		return torch.sigmoid(self.mlp(avg) + self.mlp(mx))

class SpatialAttention(nn.Module):
	""" Gate from a convolution over the channel-mean and channel-max maps """
	def __init__(self, kernel=7):
		super().__init__()
		self.conv = nn.Conv2d(2, 1, kernel, padding=kernel // 2, bias=False)

	def forward(self, x):
		avg = torch.mean(x, dim=1, keepdim=True)
		mx = torch.amax(x, dim=1, keepdim=True)
		return torch.sigmoid(self.conv(torch.cat([avg, mx], dim=1)))

class AttentionRefine(nn.Module):
	""" Channel attention followed by spatial attention; with attention disabled
	the block holds no parameters and passes its input through """
	def __init__(self, channels, reduction=16, kernel=7, enabled=True):
		super().__init__()
		self.enabled = enabled
		if enabled:
			self.channel = ChannelAttention(channels, reduction)
			self.spatial = SpatialAttention(kernel)

	def forward(self, H):
		if not self.enabled:
			return H
		Hc = H * self.channel(H)
		return Hc * self.spatial(Hc)

# inputs: refined maps of every scale, finest first
# output: the fused vector (N, sum of channels)
def msf_fuse(maps, n_scales=None):
	if n_scales is not None and len(maps) != n_scales:
		raise ut.ContractError('expected ' + str(n_scales) + ' scales, got ' + str(len(maps)))
	if not maps or any(m is None for m in maps):
		raise ut.ContractError('a scale is missing from the fusion input')
	return torch.cat([torch.mean(m, dim=(2, 3)) for m in maps], dim=1)

class MSF(nn.Module):
	""" Attention refinement with separate parameters per scale, then pooled concatenation """
	def __init__(self, widths, reduction=16, kernel=7, use_attention=True):
		super().__init__()
		self.widths = list(widths)
		self.refine = nn.ModuleList([AttentionRefine(c, reduction, kernel, use_attention) for c in widths])

	@property
	def dim(self):
		return sum(self.widths)

	# inputs: aggregated maps of every scale
	# output: fused vector and the refined maps
	def forward(self, maps):
		if len(maps) != len(self.refine):
			raise ut.ContractError('expected ' + str(len(self.refine)) + ' scales, got ' + str(len(maps)))
		refined = [r(H) for r, H in zip(self.refine, maps)]
		return msf_fuse(refined, len(self.refine)), refined
