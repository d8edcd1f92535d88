## Model complexity: exact parameter count, analytic FLOPs of one scoring pass and wall-clock time
# over the full scoring path on a synthetic clip held in memory.

from fdim.lib import video as vd
from fdim.lib.cafm import DeformConv
from fdim.lib.model import count_parameters
from fdim.lib.scoring import score_deep
import logging
import platform
import time
import numpy as np
import psutil
import torch
import torch.nn as nn

log = logging.getLogger('fdim.complexity')

# floating point operations of one bilinear sample
BILINEAR_FLOPS = 7

# inputs: geometry, frame count, frame rate and seed
# output: reference and distorted clips that share planes across frames
def synthetic_pair(width=1920, height=1080, n_frames=150, fps=25, seed=0):
	rng = np.random.default_rng(seed)
	y = rng.integers(16, 236, size=(height, width), dtype=np.uint8)
	u = rng.integers(16, 241, size=(height // 2, width // 2), dtype=np.uint8)
	v = rng.integers(16, 241, size=(height // 2, width // 2), dtype=np.uint8)
	yd = np.clip(y.astype(np.int16) + rng.integers(-8, 9, size=y.shape), 0, 255).astype(np.uint8)
	ref = vd.VideoClip([(y, u, v)] * n_frames, width, height, 8, fps, name='synthetic_ref')
	dist = vd.VideoClip([(yd, u, v)] * n_frames, width, height, 8, fps, name='synthetic_dist')
	return ref, dist

# inputs: model and the input size of one frame
# output: FLOPs of one frame pair, counted with forward hooks
def count_flops(model, height, width):
	total = [0]
	def conv_hook(m, inp, out):
		k = m.kernel_size[0] * m.kernel_size[1]
		total[0] += 2 * out.numel() * (m.in_channels // m.groups) * k
	def deform_hook(m, inp, out):
		cout, cin, kh, kw = m.weight.shape
		positions = out.numel() // cout
		total[0] += 2 * out.numel() * cin * kh * kw + BILINEAR_FLOPS * positions * cin * kh * kw
	def linear_hook(m, inp, out):
		total[0] += 2 * out.numel() * m.in_features
	handles = []
	for m in model.modules():
		if isinstance(m, nn.Conv2d):
			handles.append(m.register_forward_hook(conv_hook))
		elif isinstance(m, DeformConv):
			handles.append(m.register_forward_hook(deform_hook))
		elif isinstance(m, nn.Linear):
			handles.append(m.register_forward_hook(linear_hook))
	dtype = next(model.parameters()).dtype
	x = torch.rand(1, 3, height, width, dtype=dtype)
	model.eval()
	try:
		with torch.no_grad():
			model(x, x)
	finally:
		for h in handles:
			h.remove()
	return total[0]

# inputs: model, sampling spec, clip geometry and number of timed runs
# output: parameter count, seconds per clip, FLOPs estimate and machine facts
def measure_complexity(model, spec=None, width=1920, height=1080, n_frames=150, fps=25, runs=1, batch=4):
	spec = spec or vd.FrameSampleSpec('one-per-second')
	ref, dist = synthetic_pair(width, height, n_frames, fps)
	n_scored = len(vd.sample_frames(ref, spec))
	flops = count_flops(model, height, width) * n_scored
	times = []
	for _ in range(runs):
		start = time.perf_counter()
		score_deep(model, ref, dist, spec, batch=batch)
		times.append(time.perf_counter() - start)
	report = {'param_count': count_parameters(model), 'seconds': float(np.median(times)),
		'seconds_runs': times, 'flops_estimate': int(flops), 'frames_scored': n_scored,
		'geometry': [width, height, n_frames], 'threads': torch.get_num_threads(),
		'physical_cores': psutil.cpu_count(logical=False),
		'memory_gb': round(psutil.virtual_memory().total / 1e9, 1), 'machine': platform.processor()}
	log.info('%d parameters, %.3g GFLOPs, %.2f s per clip', report['param_count'], flops / 1e9, report['seconds'])
	return report
