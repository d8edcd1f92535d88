## The scoring pipeline: match the distorted geometry to the reference, sample frames, convert them
# to network input (through the display model and PU21 for HDR), run the deep branch over the
# sampled frames, obtain the VMAF score and fuse the calibrated branch scores.

from fdim.lib import util as ut
from fdim.lib import video as vd
from fdim.lib import hdr
from fdim.lib import manifest as mf
from fdim.lib.fit import CalibrationSet
from fdim.lib.head import aggregate_video
from fdim.lib.model import load_checkpoint
import logging
import numpy as np
import torch
import torchvision
from more_itertools import chunked
from tqdm import tqdm

log = logging.getLogger('fdim.scoring')

# inputs: a clip, a frame index and a display model (None for SDR input)
# output: the network input for the frame, float64 (3, H, W) in [0, 1]
def network_frame(clip, index, display=None):
	rgb = vd.frame_to_rgb(clip, index)
	if display is not None:
		rgb = hdr.hdr_preprocess(rgb, display)
	return rgb

# inputs: model, reference and distorted clips, a FrameSampleSpec, an optional display model
# output: QualityPrediction of the deep branch
def score_deep(model, ref, dist, spec, display=None, batch=4, sigma_pooling=None):
	dist = vd.resample_to_reference(dist, ref)
	indices = vd.sample_frames(ref, spec)
	device = next(model.parameters()).device
	dtype = next(model.parameters()).dtype
	model.eval()
	out = []
	with torch.no_grad():
		for chunk in chunked(indices, batch):
			r = np.stack([network_frame(ref, i, display) for i in chunk])
			d = np.stack([network_frame(dist, i, display) for i in chunk])
			s, u = model(torch.from_numpy(r).to(device, dtype), torch.from_numpy(d).to(device, dtype))
			out.extend(zip(s.tolist(), u.tolist()))
	pooling = sigma_pooling or model.config.sigma_pooling
	return aggregate_video(out, indices, pooling)

# versions of the libraries that determine the deep-branch result
def library_versions():
	return {'torch': torch.__version__, 'torchvision': torchvision.__version__, 'numpy': np.__version__}

# inputs: model, clips, a FrameSampleSpec, a CalibrationSet (None for raw deep scores only),
# 	a VmafTool (None to skip the traditional branch), a display model and the distorted id
# output: a dictionary with the raw, mapped and fused scores, the frame scores and tool versions
def score_pair(model, ref, dist, spec, calibration=None, tool=None, display=None, dist_id=None):
	pred = score_deep(model, ref, dist, spec, display)
	result = {'q_deep': pred.q_deep, 'sigma_hat': pred.sigma_hat, 'per_frame': pred.per_frame,
		'frame_indices': pred.frame_indices, 'q_trad': None, 'q_tilde_deep': None,
		'q_tilde_trad': None, 'Q': None}
	versions = library_versions()
	if tool is not None:
		result['q_trad'] = tool.score(ref, dist, dist_id)
		versions.update(tool.versions())
	if calibration is not None:
		if tool is None:
			result['q_tilde_deep'] = float(calibration['deep'](pred.q_deep))
		else:
			fused = calibration.fuse(pred.q_deep, result['q_trad'])
			result.update(fused.to_dict())
	result['tool_versions'] = versions
	return result

# inputs: checkpoint path and an optional calibration file
# output: the model, the calibration (from the file, else from the checkpoint, else None)
# 	and the checkpoint metadata
def load_scorer(weights, calibration_path=None):
	model, ck = load_checkpoint(weights)
	calibration = None
	if calibration_path is not None:
		calibration = CalibrationSet.load(calibration_path)
	elif ck.get('calibration'):
		calibration = CalibrationSet.from_dict(ck['calibration'])
	return model, calibration, ck

# inputs: manifest DataFrame, model, sampling spec, VmafTool (None for the deep branch only),
# 	display model
# output: one result dictionary per scored row, and the rows that could not be scored
def score_manifest(df, model, spec, tool=None, display=None):
	results, failures = [], []
	gone = dict(mf.missing_files(df))
	rows = list(zip(df.index, df.itertuples()))
	for i, row in tqdm(rows, desc='score', unit='video', leave=False):
		try:
			if i in gone:
				raise ut.MalformedInputError('missing file(s): ' + ', '.join(gone[i]))
			ref, dist = mf.load_pair(row)
			pred = score_deep(model, ref, dist, spec, display)
			q_trad = tool.score(ref, dist, row.dist_id) if tool is not None else None
		except (ut.MalformedInputError, ut.AlignmentError, ut.GeometryError) as err:
			log.warning('row %s (%s): %s', i, row.dist_id, err.message)
			failures.append({'row': int(i), 'dist_id': row.dist_id, 'error': err.message})
			continue
		results.append({'row': int(i), 'dist_id': row.dist_id, 'ref_id': row.ref_id, 'mos': float(row.mos),
			'q_deep': pred.q_deep, 'sigma_hat': pred.sigma_hat, 'q_trad': q_trad,
			'codec_group': row.codec_group, 'codec': row.codec, 'dataset': row.dataset, 'subset': row.subset})
	return results, failures
