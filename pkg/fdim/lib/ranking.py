## Pairwise learning to rank.
# Training pairs are drawn among distorted videos of the same reference (homogeneous) and of
# different references (heterogeneous). The target of a pair is the probability that the left video
# is preferred, obtained from the MOS and its spread; the network's prediction is built in the same
# way from its score and uncertainty, and the two are compared with the fidelity loss.

from fdim.lib import util as ut
import itertools
import logging
import math
import numpy as np
import torch

log = logging.getLogger('fdim.ranking')

KINDS = ['homogeneous', 'heterogeneous']
CODEC_GROUPS = ['neural', 'traditional']
# above this many heterogeneous candidates, pairs are drawn by rejection instead of enumeration
ENUMERATION_LIMIT = 200000

class SubjectiveRecord:
	""" Subjective rating of one distorted video; `index` points back into its manifest """
	def __init__(self, ref_id, dist_id, mos, mos_std, codec_tag='', codec_group='traditional', index=None):
		if not mos_std >= 0:
			raise ut.ContractError('MOS standard deviation must be non-negative for ' + str(dist_id))
		if codec_group not in CODEC_GROUPS:
			raise ut.ContractError('unknown codec group ' + str(codec_group) + ' for ' + str(dist_id))
		self.ref_id = ref_id
		self.dist_id = dist_id
		self.mos = float(mos)
		self.mos_std = float(mos_std)
		self.codec_tag = codec_tag
		self.codec_group = codec_group
		self.index = index

	def __repr__(self):
		return 'SubjectiveRecord(%s/%s, mos=%.3f)' % (self.ref_id, self.dist_id, self.mos)

class TrainPair:
	""" Two rated videos and the probability that the left one is preferred """
	def __init__(self, left, right, kind):
		if kind == 'homogeneous' and (left.ref_id != right.ref_id or left.dist_id == right.dist_id):
			raise ut.ContractError('a homogeneous pair needs two different videos of one reference')
		if kind == 'heterogeneous' and left.ref_id == right.ref_id:
			raise ut.ContractError('a heterogeneous pair needs two references')
		self.left = left
		self.right = right
		self.kind = kind
		self.g = float(gt_preference(left.mos, left.mos_std, right.mos, right.mos_std))

	def swapped(self):
		return TrainPair(self.right, self.left, self.kind)

	def ids(self):
		return [self.left.dist_id, self.right.dist_id]

# inputs: MOS and standard deviations of two videos (scalars or arrays)
# output: the probability that the first is preferred; with both deviations zero,
# 	1, 1/2 or 0 by the sign of the MOS difference
def gt_preference(mu_i, s_i, mu_j, s_j):
	d = np.asarray(mu_i, dtype=np.float64) - np.asarray(mu_j, dtype=np.float64)
	s = np.sqrt(np.asarray(s_i, dtype=np.float64)**2 + np.asarray(s_j, dtype=np.float64)**2)
	with np.errstate(divide='ignore', invalid='ignore'):
		g = np.where(s > 0, ut.Phi(d / np.where(s > 0, s, 1)), 0.5 * (1 + np.sign(d)))
	return g if g.ndim else float(g)

# inputs: predicted scores and positive uncertainties of two videos (tensors)
# output: the predicted preference probability of the first video, differentiable in all arguments
def predicted_preference(q_i, s_i, q_j, s_j):
	return torch.special.ndtr((q_i - q_j) / torch.sqrt(s_i**2 + s_j**2))

# inputs: target and predicted preference probabilities (tensors or arrays with values in [0, 1])
# output: the fidelity loss, elementwise
def fidelity_loss(g, p):
	for name, v in [('target', g), ('prediction', p)]:
		bad = (v < 0) | (v > 1)
		if bool(bad.any() if hasattr(bad, 'any') else bad):
			raise ut.ContractError('fidelity loss: ' + name + ' preference outside [0, 1]')
	return 1 - g * p - (1 - g) * (1 - p)

# inputs: records and a training config
# output: the records eligible for training, ordered by reference and distorted id
def eligible_records(records, config):
	kept = [r for r in records if r.mos <= config.max_mos]
	if len(kept) < len(records):
		log.info('excluded %d records with MOS above %g', len(records) - len(kept), config.max_mos)
	if config.codec_mix == 'traditional-only':
		kept = [r for r in kept if r.codec_group == 'traditional']
	return sorted(kept, key=lambda r: (str(r.ref_id), str(r.dist_id)))

# inputs: sorted reference ids, the data fraction and the run's generator
# output: the sorted ids of the selected ceil(f*N) references
def select_references(ref_ids, fraction, rng):
	k = max(1, math.ceil(fraction * len(ref_ids) - 1e-9))
	chosen = rng.choice(len(ref_ids), size=k, replace=False)
	return sorted(ref_ids[i] for i in chosen)

def _homogeneous_candidates(recs):
	out = []
	by_ref = {}
	for i, r in enumerate(recs):
		by_ref.setdefault(r.ref_id, []).append(i)
	for ref_id in sorted(by_ref):
		for i, j in itertools.combinations(by_ref[ref_id], 2):
			if recs[i].dist_id != recs[j].dist_id:
				out.append((i, j))
	return out

def _heterogeneous(recs, k, rng, n_homogeneous):
	n = len(recs)
	total = n * (n - 1) // 2 - n_homogeneous
	if total <= 0 or k <= 0:
		return []
	if total <= ENUMERATION_LIMIT or k >= total:
		cand = [(i, j) for i, j in itertools.combinations(range(n), 2) if recs[i].ref_id != recs[j].ref_id]
		if k >= len(cand):
			return cand
		return [cand[c] for c in sorted(rng.choice(len(cand), size=k, replace=False))]
	seen = set()
	out = []
	while len(out) < k:
		i, j = sorted(int(x) for x in rng.integers(0, n, size=2))
		if recs[i].ref_id != recs[j].ref_id and (i, j) not in seen:
			seen.add((i, j))
			out.append((i, j))
	return out

# inputs: subjective records, a training config and the run's generator (or None to seed from config)
# output: list of TrainPair in a seed-determined order, split evenly between the two kinds;
# 	each video takes part in about pairs_per_video pairs when enough candidates exist
def build_pairs(records, config, rng=None):
	if len(records) < 2:
		raise ut.ConfigurationError('pair construction needs at least 2 records, got ' + str(len(records)))
	if rng is None:
		rng = np.random.default_rng(config.seed)
	recs = eligible_records(records, config)
	refs = sorted(set(r.ref_id for r in recs))
	if not refs:
		raise ut.ConfigurationError('no records left for training after filtering')
	selected = set(select_references(refs, config.data_fraction, rng))
	recs = [r for r in recs if r.ref_id in selected]
	log.info('training on %d of %d references (%d videos)', len(selected), len(refs), len(recs))
	if len(recs) < 2:
		raise ut.ConfigurationError('fewer than 2 videos remain after reference selection')
	per_kind = max(1, int(round(len(recs) * config.pairs_per_video / 4.)))
	homo = _homogeneous_candidates(recs)
	n_homogeneous = len(homo)
	if len(homo) > per_kind:
		homo = [homo[c] for c in sorted(rng.choice(len(homo), size=per_kind, replace=False))]
	hetero = _heterogeneous(recs, per_kind, rng, n_homogeneous)
	pairs = []
	for kind, idx in [('homogeneous', homo), ('heterogeneous', hetero)]:
		for i, j in idx:
			if rng.random() < 0.5:
				i, j = j, i
			pairs.append(TrainPair(recs[i], recs[j], kind))
	order = rng.permutation(len(pairs))
	pairs = [pairs[o] for o in order]
	log.info('built %d homogeneous and %d heterogeneous pairs', len(homo), len(hetero))
	return pairs

def pair_counts(pairs):
	counts = {k: 0 for k in KINDS}
	for p in pairs:
		counts[p.kind] += 1
	return counts
