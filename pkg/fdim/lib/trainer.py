## The training loop of the deep branch: batches of video pairs, fidelity loss on the predicted
# preference, Adam updates with gradient clipping, a per-step loss log and a checkpoint.

from fdim.lib import util as ut
from fdim.lib import config as cf
from fdim.lib import video as vd
from fdim.lib import manifest as mf
from fdim.lib.head import pool_video
from fdim.lib.model import save_checkpoint
from fdim.lib.ranking import predicted_preference, fidelity_loss, pair_counts
import functools
import logging
import math
import os
import time
import numpy as np
import pandas as pd
import torch
from more_itertools import chunked
from tqdm import tqdm

log = logging.getLogger('fdim.trainer')

class ManifestClips:
	""" Loads the geometry-matched (reference, distorted) clips of manifest rows, keeping
	the most recently used ones in memory """
	def __init__(self, df, cache_size=64):
		self.df = df
		self._load = functools.lru_cache(maxsize=cache_size)(self._load_row)

	def _load_row(self, index):
		ref, dist = mf.load_pair(self.df.loc[index])
		return ref, vd.resample_to_reference(dist, ref)

	def __call__(self, record):
		return self._load(record.index)

# inputs: model, matched clips of one video, the sampling spec (which also drives the augmentation),
# 	the run's generator (frame subsets) and config
# output: video score and uncertainty (differentiable tensors)
def video_forward(model, ref, dist, spec, rng, config, device):
	indices = vd.sample_frames(ref, spec)
	if config.max_frames and len(indices) > config.max_frames:
		indices = sorted(rng.choice(indices, size=config.max_frames, replace=False).tolist())
	r, d = [], []
	for i in indices:
		rp, dp = vd.augment_crop_flip(vd.frame_to_rgb(ref, i), vd.frame_to_rgb(dist, i), spec.augmentation(),
			config.crop, config.flip_p)
		r.append(rp)
		d.append(dp)
	dtype = next(model.parameters()).dtype
	r = torch.from_numpy(np.stack(r)).to(device, dtype)
	d = torch.from_numpy(np.stack(d)).to(device, dtype)
	s, u = model(r, d)
	return pool_video(s, u, model.config.sigma_pooling)

def _dump_batch(path, batch, q, g, p, step):
	with open(path, 'w') as f:
		ut.dump_json({'step': step, 'pairs': [pr.ids() for pr in batch],
			'kinds': [pr.kind for pr in batch], 'targets': g, 'predictions': p, 'scores': q}, f)

# inputs: model, list of TrainPair, a callable giving the matched clips of a record,
# 	TrainConfig, output directory (None to skip files) and the run's generator
# output: training report with the loss curve, pair counts, checkpoint path and config fingerprint
def train_epoch(model, pairs, clips, config, out_dir=None, rng=None, references=None):
	if not pairs:
		raise ut.ConfigurationError('no training pairs')
	if rng is None:
		rng = ut.seed_everything(config.seed)
	device = next(model.parameters()).device
	spec = vd.FrameSampleSpec(config.frames, config.seed)
	params = [p for p in model.parameters() if p.requires_grad]
	opt = torch.optim.Adam(params, lr=config.lr, betas=tuple(config.betas), weight_decay=config.weight_decay)
	model.train()
	rows = []
	step = 0
	n_steps = config.epochs * math.ceil(len(pairs) / config.batch)
	start = time.time()
	progress = tqdm(total=n_steps, desc='train', unit='step', leave=False)
	for epoch in range(config.epochs):
		order = pairs if epoch == 0 else [pairs[i] for i in rng.permutation(len(pairs))]
		for batch in chunked(order, config.batch):
			ql, sl, qr, sr = [], [], [], []
			for pr in batch:
				for rec, qs, ss in [(pr.left, ql, sl), (pr.right, qr, sr)]:
					ref, dist = clips(rec)
					q, s = video_forward(model, ref, dist, spec, rng, config, device)
					qs.append(q)
					ss.append(s)
			ql, sl, qr, sr = [torch.stack(v) for v in (ql, sl, qr, sr)]
			g = torch.tensor([pr.g for pr in batch], dtype=ql.dtype, device=device)
			p = predicted_preference(ql, sl, qr, sr)
			if not torch.isfinite(p).all():
				loss = torch.tensor(float('nan'))
			else:
				loss = fidelity_loss(g, p).mean()
			if not torch.isfinite(loss):
				dump = None
				if out_dir is not None:
					dump = os.path.join(out_dir, 'nonfinite_batch.json')
					_dump_batch(dump, batch, [ql.tolist(), qr.tolist()], g.tolist(), p.tolist(), step)
				progress.close()
				raise ut.NumericError('non-finite loss at step ' + str(step) +
					('; batch written to ' + dump if dump else ''))
			opt.zero_grad()
			loss.backward()
			if config.clip_norm > 0:
				torch.nn.utils.clip_grad_norm_(params, config.clip_norm)
			opt.step()
			rows.append({'step': step, 'epoch': epoch, 'loss': loss.item(), 'n_pairs': len(batch),
				'lr': config.lr})
			step += 1
			progress.update(1)
			progress.set_postfix(loss='%.4f' % loss.item())
	progress.close()
	log.info('trained %d steps in %s, final loss %.4f', step, ut.timef(time.time() - start), rows[-1]['loss'])
	report = {'steps': step, 'loss': [r['loss'] for r in rows], 'pair_counts': pair_counts(pairs),
		'references': sorted(references) if references is not None else None,
		'fingerprint': cf.config_fingerprint(config), 'checkpoint': None, 'loss_log': None}
	if out_dir is not None:
		os.makedirs(out_dir, exist_ok=True)
		report['loss_log'] = os.path.join(out_dir, 'loss.csv')
		pd.DataFrame(rows, columns=['step', 'epoch', 'loss', 'n_pairs', 'lr']).to_csv(
			report['loss_log'], index=False, float_format='%.10g')
		report['checkpoint'] = os.path.join(out_dir, 'checkpoint.pt')
		save_checkpoint(report['checkpoint'], model, config,
			extra={'references': report['references'], 'pair_counts': report['pair_counts']})
	return report
