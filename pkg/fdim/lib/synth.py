## Synthetic reference/distorted corpus with rule-based pseudo-MOS.
# References are procedural 8-bit 4:2:0 clips (moving gratings and gradients over a drifting
# noise texture); each is distorted by every recipe, and the pseudo-MOS falls with severity.
# The pseudo-MOS is a sanity signal for pipelines and tests, not a perceptual rating.

from fdim.lib import util as ut
from fdim.lib import video as vd
from fdim.lib import manifest as mf
import logging
import os
import multiprocessing as mlp
import numpy as np
import pandas as pd
from scipy import ndimage
from scipy.fft import dctn, idctn
from tqdm import tqdm

log = logging.getLogger('fdim.synth')

KINDS = ['gaussian-blur', 'additive-noise', 'block-quantization', 'combined']
LEVELS = [1, 2, 3, 4, 5]
## severity parameters by level
BLUR_SIGMA = [0.5, 1., 2., 3., 4.5]
NOISE_STD = [2., 5., 10., 18., 30.]
QUANT_STEP = [4., 10., 20., 40., 80.]
# pseudo-MOS offsets of the kinds at equal level
KIND_OFFSET = {'gaussian-blur': 0.1, 'additive-noise': 0.15, 'block-quantization': 0.05, 'combined': 0.3}
# stand-in codec groups of the kinds
CODEC_GROUP = {'gaussian-blur': 'neural', 'additive-noise': 'neural',
	'block-quantization': 'traditional', 'combined': 'traditional'}
MOS_STD = 0.3
BLOCK = 8

class DistortionRecipe:
	""" A distortion kind at a severity level from 1 (mild) to 5 (severe) """
	def __init__(self, kind, level, seed=0):
		if kind not in KINDS:
			raise ut.ConfigurationError('unknown distortion kind ' + str(kind) + '; expected one of ' +
				', '.join(KINDS))
		if level not in LEVELS:
			raise ut.ConfigurationError('distortion level must be 1 to 5, got ' + str(level))
		self.kind = kind
		self.level = level
		self.seed = seed

	@property
	def tag(self):
		return self.kind + '-' + str(self.level)

def default_recipes(kinds=('gaussian-blur', 'block-quantization'), levels=LEVELS, seed=0):
	return [DistortionRecipe(k, l, seed) for k in kinds for l in levels]

# inputs: a recipe
# output: pseudo-MOS and its standard deviation
def pseudo_mos(recipe):
	return 5. - 0.8 * (recipe.level - 1) - KIND_OFFSET[recipe.kind], MOS_STD

## plane distortions; planes are float64 and are rounded by the caller
def blur(plane, level, chroma=False):
	s = BLUR_SIGMA[level - 1] / (2 if chroma else 1)
	return ndimage.gaussian_filter(plane, s, mode='reflect')

def noise(plane, level, rng):
	return plane + rng.normal(0, NOISE_STD[level - 1], size=plane.shape)

# quantize the 8x8 block DCT coefficients with a uniform step
def quantize(plane, level):
	q = QUANT_STEP[level - 1]
	h, w = plane.shape
	ph, pw = -h % BLOCK, -w % BLOCK
	p = np.pad(plane, ((0, ph), (0, pw)), mode='edge')
	b = p.reshape(p.shape[0] // BLOCK, BLOCK, p.shape[1] // BLOCK, BLOCK).transpose(0, 2, 1, 3)
	c = dctn(b, axes=(2, 3), norm='ortho')
	c = np.round(c / q) * q
	b = idctn(c, axes=(2, 3), norm='ortho')
	p = b.transpose(0, 2, 1, 3).reshape(p.shape)
	return p[:h, :w]

# inputs: a reference clip, a recipe and the generator for noise
# output: the distorted clip
def distort(clip, recipe, rng):
	frames = []
	for planes in clip.frames:
		out = []
		for n, p in enumerate(planes):
			x = p.astype(np.float64)
			chroma = n > 0
			if recipe.kind in ['gaussian-blur', 'combined']:
				x = blur(x, recipe.level, chroma)
			if recipe.kind == 'additive-noise':
				x = noise(x, recipe.level, rng)
			if recipe.kind in ['block-quantization', 'combined']:
				x = quantize(x, recipe.level)
			out.append(np.clip(np.round(x), 0, clip.max_value).astype(clip.dtype))
		frames.append(tuple(out))
	return clip.with_frames(frames)

# inputs: reference number, geometry, frame count, frame rate and corpus seed
# output: a procedural 8-bit reference clip
def make_reference(k, width, height, n_frames, fps, seed):
	rng = np.random.default_rng([seed, k])
	yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
	# grating: frequency, orientation, drift speed and amplitude
	f = rng.uniform(2, 12) / width
	th = rng.uniform(0, np.pi)
	v = rng.uniform(-0.3, 0.3)
	a = rng.uniform(15, 45)
	# gradient: direction and drift
	gx, gy = rng.uniform(-60, 60, size=2)
	gv = rng.uniform(-2, 2)
	# texture: smoothness and strength, drifting by whole samples per frame
	tex = ndimage.gaussian_filter(rng.normal(0, 1, size=(height, width)), rng.uniform(0.5, 3), mode='wrap')
	tex *= rng.uniform(10, 30) / (tex.std() + 1e-12)
	dx, dy = rng.integers(-2, 3, size=2)
	cu, cv = rng.uniform(-40, 40, size=2)
	frames = []
	for t in range(n_frames):
		phase = 2 * np.pi * (f * (xx * np.cos(th) + yy * np.sin(th)) + v * t)
		y = 128 + a * np.sin(phase) + gx * (xx / width - 0.5) + gy * (yy / height - 0.5) + gv * t * 0.1
		y += np.roll(tex, (int(dy) * t, int(dx) * t), axis=(0, 1))
		cy, cx = yy[::2, ::2] / height - 0.5, xx[::2, ::2] / width - 0.5
		u = 128 + cu * cx + 10 * np.sin(phase[::2, ::2])
		w = 128 + cv * cy - 10 * np.cos(phase[::2, ::2])
		frames.append(tuple(np.clip(np.round(p), 16, 240).astype(np.uint8) for p in (y, u, w)))
	return vd.VideoClip(frames, width, height, 8, fps, 'sdr-srgb', name='ref_%03d' % k)

# write one reference and all its distorted versions; returns the manifest rows
def _build_reference(k, recipes, out_dir, seed, width, height, n_frames, fps):
	ref = make_reference(k, width, height, n_frames, fps, seed)
	ref_name = 'ref_%03d.yuv' % k
	vd.write_raw_video(ref, os.path.join(out_dir, ref_name))
	rows = []
	for j, r in enumerate(recipes):
		rng = np.random.default_rng([seed, k, KINDS.index(r.kind), r.level, r.seed])
		dist = distort(ref, r, rng)
		name = 'dist_%03d_%s.yuv' % (k, r.tag)
		vd.write_raw_video(dist, os.path.join(out_dir, name))
		mos, std = pseudo_mos(r)
		rows.append({'ref_path': ref_name, 'dist_path': name, 'width': width, 'height': height,
			'fps': fps, 'pix_fmt': 'yuv420p', 'mos': mos, 'mos_std': std, 'codec': r.kind,
			'codec_group': CODEC_GROUP[r.kind], 'ref_id': 'ref_%03d' % k,
			'dist_id': 'dist_%03d_%s' % (k, r.tag), 'dataset': 'synthetic', 'subset': r.kind,
			'level': r.level})
	return rows

# inputs: number of references, recipes, output directory, seed, geometry and worker count
# output: path of the written manifest
def generate_corpus(n_refs, recipes, out_dir, seed=0, width=256, height=256, n_frames=50, fps=25,
	workers=1):
	if n_refs < 2:
		raise ut.ConfigurationError('a corpus needs at least 2 references, got ' + str(n_refs))
	if not recipes:
		raise ut.ConfigurationError('a corpus needs at least one distortion recipe')
	vd.check_geometry(width, height, 8)
	os.makedirs(out_dir, exist_ok=True)
	args = [(k, recipes, out_dir, seed, width, height, n_frames, fps) for k in range(n_refs)]
	if workers > 1:
		with mlp.Pool(workers) as pool:
			results = pool.starmap(_build_reference, args)
	else:
		results = [_build_reference(*a) for a in tqdm(args, desc='synth', unit='ref', leave=False)]
	rows = [row for r in results for row in r]
	path = os.path.join(out_dir, 'manifest.csv')
	mf.write_manifest(pd.DataFrame(rows), path)
	log.info('wrote %d distorted clips of %d references to %s', len(rows), n_refs, out_dir)
	return path

# inputs: a luma plane
# output: energy above a quarter of the Nyquist frequency
def high_frequency_energy(plane):
	spec = np.abs(np.fft.fft2(plane.astype(np.float64) - plane.mean()))**2
	fy = np.abs(np.fft.fftfreq(plane.shape[0]))[:, None]
	fx = np.abs(np.fft.fftfreq(plane.shape[1]))[None, :]
	return float(spec[np.maximum(fy, fx) > 0.125].sum())
