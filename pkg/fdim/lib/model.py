## This module contains the FDIMNet class: the deep quality branch assembled from the
# weight-shared encoder, one feature-distance block per scale, multi-scale fusion and the
# regression head. It also builds ablation variants and saves and loads checkpoints.

from fdim.lib import util as ut
from fdim.lib import config as cf
from fdim.lib.backbone import Backbone
from fdim.lib.cafm import CAFM
from fdim.lib.msf import MSF
from fdim.lib.head import QualityHead, regress_frame
import dataclasses
import logging
import torch
import torch.nn as nn

log = logging.getLogger('fdim.model')

FORMAT_VERSION = 1

class FDIMNet(nn.Module):
	""" Maps batches of (reference, distorted) frames to raw frame scores and raw uncertainties """
	def __init__(self, config=None):
		super().__init__()
		c = config or cf.ModelConfig()
		self.config = c
		if c.backbone == 'resnet18':
			self.backbone = Backbone.resnet18(c.pretrained, c.freeze_backbone)
		elif c.backbone == 'toy':
			self.backbone = Backbone.toy(c.toy_channels, c.toy_blocks, c.freeze_backbone)
		else:
			raise ut.ConfigurationError('unknown backbone ' + str(c.backbone))
		widths = self.backbone.widths
		self.cafm = nn.ModuleList([CAFM(w, c.offset_source, c.use_discrepancy_map, c.use_deformable)
			for w in widths])
		self.msf = MSF(widths, c.reduction, c.spatial_kernel, c.use_msf_attention)
		self.head = QualityHead(self.msf.dim, c.hidden)

	# inputs: reference and distorted frames (N, 3, H, W) in [0, 1]
	# output: raw scores (N,), raw uncertainties (N,) and, on request, the per-scale maps
	def forward(self, ref, dist, return_maps=False):
		if ref.shape != dist.shape:
			raise ut.ContractError('reference frames ' + str(tuple(ref.shape)) +
				' and distorted frames ' + str(tuple(dist.shape)) + ' differ in shape')
		n = ref.shape[0]
		# one pass through the encoder for both inputs
		pyramid = self.backbone(torch.cat([ref, dist], dim=0))
		H, E = [], []
		for block, F in zip(self.cafm, pyramid):
			h, e = block(F[:n], F[n:])
			H.append(h)
			E.append(e)
		V, refined = self.msf(H)
		score, raw_sigma = regress_frame(self.head, V)
		if return_maps:
			return score, raw_sigma, {'E': E, 'H': H, 'H_tilde': refined, 'V': V}
		return score, raw_sigma

def count_parameters(model):
	return sum(p.numel() for p in model.parameters())

# inputs: ablation assignments (key -> value or string), and the base model and training configs
# output: a freshly built model differing from the base only in the toggled components,
# 	and the training config with the data-selection toggles applied
def apply_ablation_config(ablation, model_config=None, train_config=None):
	unknown = [k for k in ablation if k not in cf.ABLATION_KEYS]
	if unknown:
		raise ut.ConfigurationError('unknown ablation key(s): ' + ', '.join(sorted(unknown)) +
			'; expected ' + ', '.join(cf.ABLATION_KEYS))
	mc = model_config or cf.ModelConfig()
	tc = train_config or cf.TrainConfig(model=mc)
	mc = cf.apply_values(mc, {k: v for k, v in ablation.items() if k in cf.MODEL_ABLATION_KEYS})
	tc = cf.apply_values(tc, {k: v for k, v in ablation.items() if k in cf.TRAIN_ABLATION_KEYS})
	tc = dataclasses.replace(tc, model=mc)
	log.info('model variant: %s', ', '.join(k + '=' + str(getattr(mc, k)) for k in cf.MODEL_ABLATION_KEYS))
	return FDIMNet(mc), tc

# inputs: path, model and optional training config, calibration set and extra metadata
# output: the config fingerprint stored with the weights
def save_checkpoint(path, model, train_config=None, calibration=None, extra=None):
	tc = cf.config_to_dict(train_config) if train_config is not None else None
	mc = cf.config_to_dict(model.config)
	fp = cf.config_fingerprint(train_config) if train_config is not None else ut.fingerprint(mc)
	torch.save({
		'format_version': FORMAT_VERSION,
		'model_config': mc,
		'train_config': tc,
		'fingerprint': fp,
		'state_dict': model.state_dict(),
		'calibration': calibration.to_dict() if calibration is not None else None,
		'extra': extra or {}
	}, path)
	return fp

# inputs: checkpoint path
# output: the model in inference mode and the checkpoint's metadata dictionary
def load_checkpoint(path, map_location='cpu'):
	try:
		ck = torch.load(path, map_location=map_location, weights_only=False)
	except FileNotFoundError:
		raise
	except Exception as err:
		raise ut.MalformedInputError(str(path) + ': not a checkpoint (' + str(err) + ')')
	if not isinstance(ck, dict) or ck.get('format_version') != FORMAT_VERSION:
		v = ck.get('format_version') if isinstance(ck, dict) else None
		raise ut.MalformedInputError(str(path) + ': unsupported checkpoint format version ' + str(v))
	try:
		mc = cf.model_config_from_dict(ck['model_config'])
		# the stored weights replace any pretrained initialization
		model = FDIMNet(dataclasses.replace(mc, pretrained=False))
		model.config = mc
		model.load_state_dict(ck['state_dict'])
	except (KeyError, TypeError, RuntimeError) as err:
		raise ut.MalformedInputError(str(path) + ': incomplete checkpoint (' + str(err) + ')')
	model.eval()
	return model, ck

# freeze a calibration into an existing checkpoint file
def embed_calibration(path, calibration):
	ck = torch.load(path, map_location='cpu', weights_only=False)
	if not isinstance(ck, dict) or ck.get('format_version') != FORMAT_VERSION:
		raise ut.MalformedInputError(str(path) + ': not a checkpoint of format version ' + str(FORMAT_VERSION))
	ck['calibration'] = calibration.to_dict()
	torch.save(ck, path)
