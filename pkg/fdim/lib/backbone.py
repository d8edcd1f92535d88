## Weight-shared multi-scale feature encoder.
# The default encoder is the 18-layer residual network with taps after its four residual stages;
# a toy encoder of the same shape (stem + strided residual stages) is available for numerical checks.

from fdim.lib import util as ut
import logging
import torch
import torch.nn as nn
from torchvision.models import resnet18, ResNet18_Weights
from torchvision.models.resnet import BasicBlock

log = logging.getLogger('fdim.backbone')

# channel standardization constants of the ImageNet checkpoint
IMAGENET_MEAN = [0.485, 0.456, 0.406]
IMAGENET_STD = [0.229, 0.224, 0.225]
# the smallest frame side the encoder accepts
MIN_SIDE = 32

class FeaturePyramid(list):
	""" Feature maps of one batch of frames, finest scale first """
	@property
	def channels(self):
		return [f.shape[1] for f in self]

class Backbone(nn.Module):
	""" A stem followed by residual stages; the output of every stage is one pyramid level.
	Inputs are RGB in [0, 1] and are standardized with the checkpoint statistics. """
	def __init__(self, stem, stages, widths, strides, freeze=False):
		super().__init__()
		self.stem = stem
		self.stages = nn.ModuleList(stages)
		self.widths = list(widths)
		self.strides = list(strides)
		self.register_buffer('mean', torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
		self.register_buffer('std', torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))
		self.frozen = freeze
		if freeze:
			for p in self.parameters():
				p.requires_grad_(False)

	@classmethod
	def resnet18(cls, pretrained=True, freeze=False):
		weights = ResNet18_Weights.IMAGENET1K_V1 if pretrained else None
		return cls.from_resnet(resnet18(weights=weights), freeze)

	# taps after the four residual stages of an existing torchvision network
	@classmethod
	def from_resnet(cls, net, freeze=False):
		stem = nn.Sequential(net.conv1, net.bn1, net.relu, net.maxpool)
		return cls(stem, [net.layer1, net.layer2, net.layer3, net.layer4],
			[64, 128, 256, 512], [4, 8, 16, 32], freeze)

	# a small encoder with the given width and number of stages, each halving the resolution
	@classmethod
	def toy(cls, channels=4, blocks=2, freeze=False):
		stem = nn.Sequential(nn.Conv2d(3, channels, 3, stride=2, padding=1, bias=False),
			nn.BatchNorm2d(channels), nn.ReLU(inplace=True))
		stages = []
		for _ in range(blocks):
			down = nn.Sequential(nn.Conv2d(channels, channels, 1, stride=2, bias=False),
				nn.BatchNorm2d(channels))
			stages.append(BasicBlock(channels, channels, stride=2, downsample=down))
		strides = [2**(i + 2) for i in range(blocks)]
		return cls(stem, stages, [channels] * blocks, strides, freeze)

	# batch statistics are never updated; pair batches are too small for them
	def train(self, mode=True):
		super().train(mode)
		for m in self.modules():
			if isinstance(m, nn.BatchNorm2d):
				m.eval()
		return self

	# inputs: a batch of RGB frames (N, 3, H, W) with values in [0, 1]
	# output: a FeaturePyramid with one map per stage
	def forward(self, x):
		if x.dim() != 4 or x.shape[1] != 3:
			raise ut.ContractError('expected frames of shape (N, 3, H, W), got ' + str(tuple(x.shape)))
		if x.shape[2] < MIN_SIDE or x.shape[3] < MIN_SIDE:
			raise ut.GeometryError('frames must be at least ' + str(MIN_SIDE) + 'x' + str(MIN_SIDE) +
				', got ' + str(x.shape[3]) + 'x' + str(x.shape[2]))
		h = self.stem((x - self.mean.to(x.dtype)) / self.std.to(x.dtype))
		levels = FeaturePyramid()
		for stage in self.stages:
			h = stage(h)
			levels.append(h)
		return levels

# inputs: an encoder and a batch of frames
# output: the frames' FeaturePyramid
def extract_pyramid(backbone, frame):
	if frame.dim() == 3:
		frame = frame.unsqueeze(0)
	return backbone(frame)
