## This module contains the VideoClip and FrameSampleSpec classes and the raw planar video plumbing:
# reading and writing YUV 4:2:0 files, frame sampling, geometry matching and training augmentation.
# A frame is a tuple of three planes (Y, U, V); chroma planes are half-resolution in each dimension.

from fdim.lib import util as ut
import logging
import os
import math
import numpy as np
import torch
import torch.nn.functional as F

log = logging.getLogger('fdim.video')

SIGNAL_FORMATS = ['sdr-srgb', 'hdr-pq', 'hdr-hlg']
# pixel format strings of the manifests and the corresponding bit depths
PIX_FMTS = {'yuv420p': 8, 'yuv420p10le': 10}

## full-range YCbCr to RGB coefficients: (Cr->R, Cb->G, Cr->G, Cb->B)
BT709 = (1.5748, 0.187324, 0.468124, 1.8556)
BT2020 = (1.4746, 0.164553, 0.571353, 1.8814)

class VideoClip:
	""" A decoded sequence of planar YUV 4:2:0 frames with its geometry, bit depth,
	frame rate and signal format """
	def __init__(self, frames, width, height, bit_depth, fps, signal_format='sdr-srgb', name=''):
		check_geometry(width, height, bit_depth)
		if signal_format not in SIGNAL_FORMATS:
			raise ut.ConfigurationError('unknown signal format ' + str(signal_format) +
				'; expected one of ' + ', '.join(SIGNAL_FORMATS))
		self.frames = frames
		self.width = width
		self.height = height
		self.bit_depth = bit_depth
		self.fps = fps
		self.signal_format = signal_format
		self.name = name

	def __len__(self):
		return len(self.frames)

	@property
	def dtype(self):
		return np.uint8 if self.bit_depth == 8 else np.dtype('<u2')

	@property
	def max_value(self):
		return 2**self.bit_depth - 1

	@property
	def hdr(self):
		return self.signal_format != 'sdr-srgb'

	# a copy of this clip's metadata with other frames
	def with_frames(self, frames, width=None, height=None):
		return VideoClip(frames, width or self.width, height or self.height, self.bit_depth,
			self.fps, self.signal_format, self.name)

class FrameSampleSpec:
	""" Frame sampling strategy: 'one-per-second', 'all' or 'stride-k' with integer k >= 1;
	the seed starts the generator of the crop and flip augmentation of the sampled frames """
	def __init__(self, strategy='one-per-second', seed=0):
		self.strategy = strategy
		self.seed = seed
		self._augmentation = None
		if strategy in ['one-per-second', 'all']:
			self.stride = None
		elif strategy.startswith('stride-'):
			try:
				self.stride = int(strategy[len('stride-'):])
			except ValueError:
				self.stride = 0
			if self.stride < 1:
				raise ut.ConfigurationError('bad frame stride in ' + strategy)
		else:
			raise ut.ConfigurationError('unknown frame sampling strategy ' + strategy)

	# crop and flip generator, created on first use and shared by every later call
	def augmentation(self):
		if self._augmentation is None:
			self._augmentation = np.random.default_rng(self.seed)
		return self._augmentation

def check_geometry(width, height, bit_depth):
	if bit_depth not in [8, 10]:
		raise ut.ConfigurationError('unsupported bit depth ' + str(bit_depth) + '; expected 8 or 10')
	if width <= 0 or height <= 0 or width % 2 or height % 2:
		raise ut.ConfigurationError('4:2:0 frames need positive even dimensions, got ' +
			str(width) + 'x' + str(height))

# inputs: frame width, height and bit depth
# output: the number of bytes one 4:2:0 frame occupies on disk
def frame_bytes(width, height, bit_depth):
	bps = 1 if bit_depth == 8 else 2
	return (width * height + 2 * (width // 2) * (height // 2)) * bps

# inputs: path to a raw planar YUV 4:2:0 file, its geometry, frame rate and signal format
# output: a VideoClip holding every frame of the file
def read_raw_video(path, width, height, bit_depth, fps, signal_format='sdr-srgb'):
	check_geometry(width, height, bit_depth)
	fb = frame_bytes(width, height, bit_depth)
	size = os.path.getsize(path)
	if size == 0 or size % fb:
		n = max(1, math.ceil(size / fb))
		raise ut.MalformedInputError(path + ': expected a multiple of ' + str(fb) +
			' bytes per frame (e.g. ' + str(n * fb) + ' bytes), found ' + str(size) + ' bytes')
	dtype = np.uint8 if bit_depth == 8 else np.dtype('<u2')
	data = np.fromfile(path, dtype=dtype)
	ny = width * height
	nc = (width // 2) * (height // 2)
	frames = []
	for f in data.reshape(-1, ny + 2 * nc):
		y = f[:ny].reshape(height, width)
		u = f[ny:ny + nc].reshape(height // 2, width // 2)
		v = f[ny + nc:].reshape(height // 2, width // 2)
		frames.append((y, u, v))
	log.debug('read %d frames of %dx%d from %s', len(frames), width, height, path)
	return VideoClip(frames, width, height, bit_depth, fps, signal_format,
		name=os.path.basename(path))

# write the frames of a clip as a raw planar file; inverse of read_raw_video
def write_raw_video(clip, path):
	with open(path, 'wb') as f:
		for planes in clip.frames:
			for p in planes:
				f.write(np.ascontiguousarray(p, dtype=clip.dtype).tobytes())

# inputs: a clip and a sampling spec
# output: strictly increasing list of frame indices within the clip, starting at 0;
# 	one-per-second steps by round(fps) frames, so it yields ceil(n / round(fps)) indices
# 	(10 for 300 frames at 29.97 fps)
def sample_frames(clip, spec):
	n = len(clip)
	if n == 0:
		raise ut.ContractError('cannot sample frames of an empty clip')
	if spec.strategy == 'all':
		step = 1
	elif spec.strategy == 'one-per-second':
		step = max(1, int(round(clip.fps)))
	else:
		step = spec.stride
	return list(range(0, n, step))

# bicubic resize of one plane to (height, width), rounded back to the integer sample range
def resize_plane(plane, height, width, max_value):
	t = torch.from_numpy(plane.astype(np.float64))[None, None]
	r = F.interpolate(t, size=(height, width), mode='bicubic', align_corners=False)
	r = torch.round(r).clamp_(0, max_value)
	return r[0, 0].numpy().astype(plane.dtype)

# inputs: distorted and reference clips with equal frame counts
# output: the distorted clip at the reference geometry (the same object if it already matches)
def resample_to_reference(dist, ref):
	if len(dist) != len(ref):
		raise ut.AlignmentError('frame count mismatch: distorted has ' + str(len(dist)) +
			' frames, reference has ' + str(len(ref)))
	if (dist.width, dist.height) == (ref.width, ref.height):
		return dist
	log.info('resampling %s from %dx%d to %dx%d', dist.name, dist.width, dist.height,
		ref.width, ref.height)
	w, h = ref.width, ref.height
	frames = []
	for y, u, v in dist.frames:
		frames.append((resize_plane(y, h, w, dist.max_value),
			resize_plane(u, h // 2, w // 2, dist.max_value),
			resize_plane(v, h // 2, w // 2, dist.max_value)))
	return dist.with_frames(frames, w, h)

# inputs: a clip and a frame index
# output: the frame as a float64 RGB array of shape (3, height, width) with values in [0, 1];
# chroma is upsampled by sample repetition, BT.709 for SDR and BT.2020 for HDR signals
def frame_to_rgb(clip, index):
	y, u, v = clip.frames[index]
	s = 1. / clip.max_value
	Y = y.astype(np.float64) * s
	Cb = np.repeat(np.repeat(u.astype(np.float64) * s - 0.5, 2, axis=0), 2, axis=1)
	Cr = np.repeat(np.repeat(v.astype(np.float64) * s - 0.5, 2, axis=0), 2, axis=1)
	rv, gu, gv, bu = BT2020 if clip.hdr else BT709
	rgb = np.stack([Y + rv * Cr, Y - gu * Cb - gv * Cr, Y + bu * Cb])
	return np.clip(rgb, 0, 1)

# reflect-pad a (channels, height, width) array so that both spatial sides reach at least size
def pad_to(frame, size):
	while frame.shape[1] < size or frame.shape[2] < size:
		ph = min(max(size - frame.shape[1], 0), frame.shape[1] - 1)
		pw = min(max(size - frame.shape[2], 0), frame.shape[2] - 1)
		if ph == 0 and pw == 0:
			mode = 'edge'
			ph, pw = max(size - frame.shape[1], 0), max(size - frame.shape[2], 0)
		else:
			mode = 'reflect'
		frame = np.pad(frame, ((0, 0), (0, ph), (0, pw)), mode=mode)
	return frame

# inputs: reference and distorted frames (channels, height, width), a seed or numpy Generator,
# 	crop size and flip probability
# output: reference and distorted patches cut from the same window with the same flip decision
def augment_crop_flip(ref_frame, dist_frame, seed, crop=512, flip_p=0.5):
	if ref_frame.shape != dist_frame.shape:
		raise ut.ContractError('reference frame ' + str(ref_frame.shape) +
			' and distorted frame ' + str(dist_frame.shape) + ' differ in shape')
	rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
	ref_frame = pad_to(ref_frame, crop)
	dist_frame = pad_to(dist_frame, crop)
	_, h, w = ref_frame.shape
	top = int(rng.integers(0, h - crop + 1))
	left = int(rng.integers(0, w - crop + 1))
	flip = bool(rng.random() < flip_p)
	window = (slice(None), slice(top, top + crop), slice(left, left + crop))
	r = ref_frame[window]
	d = dist_frame[window]
	if flip:
		r = r[:, :, ::-1]
		d = d[:, :, ::-1]
	return np.ascontiguousarray(r), np.ascontiguousarray(d)
