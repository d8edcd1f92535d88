## Configuration of the network and of training, and the flat `key = value` config file format.
# Every config has a fingerprint that is stored with the artifacts it produced.

from fdim.lib import util as ut
import dataclasses
from dataclasses import dataclass, field, fields, asdict
import typing

@dataclass
class ModelConfig:
	""" Architecture of the deep branch, including the ablation toggles """
	backbone: str = 'resnet18'
	pretrained: bool = True
	freeze_backbone: bool = False
	offset_source: str = 'reference'
	use_discrepancy_map: bool = True
	use_deformable: bool = True
	use_msf_attention: bool = True
	reduction: int = 16
	spatial_kernel: int = 7
	hidden: typing.Tuple[int, int] = (512, 128)
	sigma_pooling: str = 'raw-mean'
	# width and number of stages of the toy encoder
	toy_channels: int = 4
	toy_blocks: int = 4

@dataclass
class TrainConfig:
	""" Optimization, sampling and data-selection settings of a training run """
	lr: float = 1e-4
	betas: typing.Tuple[float, float] = (0.9, 0.999)
	weight_decay: float = 5e-4
	batch: int = 8
	epochs: int = 1
	crop: int = 512
	flip_p: float = 0.5
	pairs_per_video: int = 20
	data_fraction: float = 1.0
	codec_mix: str = 'mixed'
	frames: str = 'one-per-second'
	# sampled frames used per video and step, 0 for all
	max_frames: int = 0
	clip_norm: float = 5.
	max_mos: float = 5.
	seed: int = 0
	model: ModelConfig = field(default_factory=ModelConfig)

	def __post_init__(self):
		validate_train_config(self)

CODEC_MIXES = ['mixed', 'traditional-only']
# ablation keys and the config they belong to
MODEL_ABLATION_KEYS = ['offset_source', 'use_discrepancy_map', 'use_deformable', 'use_msf_attention']
TRAIN_ABLATION_KEYS = ['codec_mix', 'data_fraction']
ABLATION_KEYS = MODEL_ABLATION_KEYS + TRAIN_ABLATION_KEYS

def validate_train_config(c):
	for name in ['lr', 'weight_decay', 'flip_p', 'clip_norm']:
		if getattr(c, name) < 0:
			raise ut.ConfigurationError(name + ' must be non-negative, got ' + str(getattr(c, name)))
	if c.max_frames < 0:
		raise ut.ConfigurationError('max_frames must be non-negative, got ' + str(c.max_frames))
	for name in ['batch', 'epochs', 'crop', 'pairs_per_video']:
		if getattr(c, name) <= 0:
			raise ut.ConfigurationError(name + ' must be positive, got ' + str(getattr(c, name)))
	if not 0 < c.data_fraction <= 1:
		raise ut.ConfigurationError('data_fraction must be in (0, 1], got ' + str(c.data_fraction))
	if c.codec_mix not in CODEC_MIXES:
		raise ut.ConfigurationError('codec_mix must be one of ' + ', '.join(CODEC_MIXES))
	if not all(0 <= b < 1 for b in c.betas):
		raise ut.ConfigurationError('betas must lie in [0, 1), got ' + str(c.betas))
	if c.flip_p > 1:
		raise ut.ConfigurationError('flip_p must be a probability, got ' + str(c.flip_p))

# inputs: a string from a config file or a command line and the type of the target field
# output: the typed value
def parse_value(text, kind, key=''):
	text = text.strip()
	try:
		if kind is bool:
			low = text.lower()
			if low in ['true', 'yes', '1', 'on']:
				return True
			if low in ['false', 'no', '0', 'off']:
				return False
			raise ValueError(text)
		if kind is int:
			return int(text)
		if kind is float:
			return float(text)
		if typing.get_origin(kind) is tuple:
			args = typing.get_args(kind)
			parts = [p for p in text.strip('()[] ').split(',') if p.strip()]
			if len(parts) != len(args):
				raise ValueError(text)
			return tuple(parse_value(p, a) for p, a in zip(parts, args))
		return text
	except ValueError:
		raise ut.ConfigurationError('bad value for ' + key + ': ' + repr(text))

def _types(cls):
	hints = typing.get_type_hints(cls)
	return {f.name: hints[f.name] for f in fields(cls)}

# inputs: a dict of string values and a dataclass instance
# output: a copy of the instance with the values applied; unknown keys are configuration errors
def apply_values(obj, values):
	types = _types(type(obj))
	changes = {}
	for key, text in values.items():
		if key not in types or dataclasses.is_dataclass(types[key]):
			raise ut.ConfigurationError('unknown configuration key ' + key)
		v = text if not isinstance(text, str) else parse_value(text, types[key], key)
		changes[key] = v
	return dataclasses.replace(obj, **changes)

# inputs: key = value assignments (strings); model keys go to the model config
# output: a dict of model assignments and a dict of training assignments
def split_assignments(values):
	model_keys = set(_types(ModelConfig))
	train_keys = set(_types(TrainConfig)) - {'model'}
	m, t = {}, {}
	for key, v in values.items():
		if key in model_keys:
			m[key] = v
		elif key in train_keys:
			t[key] = v
		else:
			raise ut.ConfigurationError('unknown configuration key ' + key)
	return m, t

# inputs: strings of the form key=value
# output: an ordered dict of the assignments
def parse_assignments(items):
	out = {}
	for item in items or []:
		if '=' not in item:
			raise ut.ConfigurationError('expected key=value, got ' + repr(item))
		key, value = item.split('=', 1)
		out[key.strip()] = value.strip()
	return out

# inputs: lines of a flat config file; '#' starts a comment
# output: an ordered dict of the assignments
def parse_config_text(text):
	items = []
	for n, line in enumerate(text.splitlines(), 1):
		line = line.split('#', 1)[0].strip()
		if not line:
			continue
		if '=' not in line:
			raise ut.ConfigurationError('config line ' + str(n) + ': expected key = value')
		items.append(line)
	return parse_assignments(items)

# inputs: path of a flat config file (or None) and key=value overrides
# output: a TrainConfig with the nested ModelConfig
def load_train_config(path=None, overrides=None):
	values = {}
	if path is not None:
		with open(path) as f:
			values.update(parse_config_text(f.read()))
	values.update(overrides or {})
	m, t = split_assignments(values)
	model = apply_values(ModelConfig(), m)
	return apply_values(TrainConfig(model=model), t)

def config_to_dict(c):
	return asdict(c)

def train_config_from_dict(d):
	d = dict(d)
	model = ModelConfig(**_tuples(ModelConfig, d.pop('model', {})))
	return TrainConfig(model=model, **_tuples(TrainConfig, d))

def model_config_from_dict(d):
	return ModelConfig(**_tuples(ModelConfig, d))

# json turns tuples into lists
def _tuples(cls, d):
	types = _types(cls)
	out = {}
	for k, v in d.items():
		if k not in types:
			raise ut.MalformedInputError('unknown stored configuration key ' + k)
		out[k] = tuple(v) if typing.get_origin(types[k]) is tuple else v
	return out

def config_fingerprint(c):
	return ut.fingerprint(asdict(c))
