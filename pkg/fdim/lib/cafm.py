## Content-adaptive feature-distance modeling at one scale.
# The squared discrepancy between reference and distorted features is concatenated with both
# feature maps and aggregated by a 3x3 deformable convolution whose sampling offsets are predicted
# from the reference features (or another source for ablation).

from fdim.lib import util as ut
import math
import torch
import torch.nn as nn
from torchvision.ops import deform_conv2d

OFFSET_SOURCES = ['reference', 'distorted', 'discrepancy', 'concatenated']

def _check_same(a, b, what):
	if a.shape != b.shape:
		raise ut.ContractError(what + ': shapes ' + str(tuple(a.shape)) + ' and ' +
			str(tuple(b.shape)) + ' differ')

# elementwise squared difference of two feature maps
def discrepancy_map(F_R, F_D):
	_check_same(F_R, F_D, 'discrepancy map')
	return (F_R - F_D)**2

# channel concatenation in the order (reference, distorted, discrepancy);
# the discrepancy is left out when E is None
def assemble_comparison(F_R, F_D, E=None):
	_check_same(F_R, F_D, 'comparison tensor')
	parts = [F_R, F_D]
	if E is not None:
		if E.shape[0] != F_R.shape[0] or E.shape[2:] != F_R.shape[2:]:
			raise ut.ContractError('comparison tensor: discrepancy map ' + str(tuple(E.shape)) +
				' does not match features ' + str(tuple(F_R.shape)))
		parts.append(E)
	return torch.cat(parts, dim=1)

class OffsetGenerator(nn.Module):
	""" One convolution mapping its source to 2*K*K offset channels; starts at zero """
	def __init__(self, in_channels, kernel=3):
		super().__init__()
		self.conv = nn.Conv2d(in_channels, 2 * kernel * kernel, kernel, padding=kernel // 2)
		nn.init.zeros_(self.conv.weight)
		nn.init.zeros_(self.conv.bias)

	def forward(self, source):
		return self.conv(source)

class DeformConv(nn.Module):
	""" Deformable convolution without modulation; sampling outside the grid reads zeros """
	def __init__(self, in_channels, out_channels, kernel=3):
		super().__init__()
		self.kernel = kernel
		self.weight = nn.Parameter(torch.empty(out_channels, in_channels, kernel, kernel))
		self.bias = nn.Parameter(torch.empty(out_channels))
		# the same initialization as a standard convolution
		nn.init.kaiming_uniform_(self.weight, a=math.sqrt(5))
		bound = 1 / math.sqrt(in_channels * kernel * kernel)
		nn.init.uniform_(self.bias, -bound, bound)

	def forward(self, x, offsets):
		return deformable_aggregate(x, offsets, self.weight, self.bias)

# inputs: comparison tensor, offsets (N, 2*K*K, H, W), convolution weight and bias
# output: the deformable convolution of the comparison tensor
def deformable_aggregate(C, offsets, weight, bias=None):
	if not torch.isfinite(offsets).all():
		raise ut.NumericError('non-finite deformable convolution offsets')
	k = weight.shape[-1]
	return deform_conv2d(C, offsets, weight, bias, padding=(k // 2, k // 2))

class CAFM(nn.Module):
	""" Feature-distance block for one scale with C channels in each feature map;
	the output has C channels and the input's spatial size """
	def __init__(self, channels, offset_source='reference', use_discrepancy_map=True,
		use_deformable=True, kernel=3):
		super().__init__()
		if offset_source not in OFFSET_SOURCES:
			raise ut.ConfigurationError('unknown offset source ' + str(offset_source) +
				'; expected one of ' + ', '.join(OFFSET_SOURCES))
		if offset_source == 'discrepancy' and not use_discrepancy_map:
			raise ut.ConfigurationError('offsets cannot come from the discrepancy map when it is disabled')
		self.channels = channels
		self.offset_source = offset_source
		self.use_discrepancy_map = use_discrepancy_map
		self.use_deformable = use_deformable
		in_channels = (3 if use_discrepancy_map else 2) * channels
		if use_deformable:
			src = in_channels if offset_source == 'concatenated' else channels
			self.offsets = OffsetGenerator(src, kernel)
			self.aggregate = DeformConv(in_channels, channels, kernel)
		else:
			self.offsets = None
			self.aggregate = nn.Conv2d(in_channels, channels, kernel, padding=kernel // 2)

	# the offsets for the configured source
	def generate_offsets(self, F_R, F_D, E, C):
		source = {'reference': F_R, 'distorted': F_D, 'discrepancy': E, 'concatenated': C}
		return self.offsets(source[self.offset_source])

	# inputs: reference and distorted feature maps of this scale
	# output: aggregated map H and the discrepancy map E (None when disabled)
	def forward(self, F_R, F_D):
		E = discrepancy_map(F_R, F_D) if self.use_discrepancy_map else None
		C = assemble_comparison(F_R, F_D, E)
		if self.use_deformable:
			H = self.aggregate(C, self.generate_offsets(F_R, F_D, E, C))
		else:
			H = self.aggregate(C)
		return H, E
