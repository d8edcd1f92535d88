## This module contains the BranchMapping, CalibrationSet and FusedScore classes.
# Each quality branch (deep features, VMAF) has its own four-parameter logistic mapping
# onto the subjective scale:
#	q~ = b1 * (1/2 - 1 / (1 + exp(b2 * (q - b3)))) + b4
# The final quality is the mean of the two mapped branch scores.
# Mappings are fitted once on calibration data and then frozen for inference.

from fdim.lib import util as ut
import json
import logging
import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

log = logging.getLogger('fdim.fit')

BRANCHES = ['deep', 'trad']
# minimum number of points for a mapping fit
MIN_POINTS = 8

# the logistic mapping evaluated without overflow for any argument
def logistic4(q, b1, b2, b3, b4):
	q = np.asarray(q, dtype=np.float64)
	return b1 * (0.5 - expit(-b2 * (q - b3))) + b4

class BranchMapping:
	""" Four-parameter logistic mapping of one branch's raw scores onto the subjective scale """
	def __init__(self, branch, beta, residual=None, n_points=0, data_fingerprint=''):
		if branch not in BRANCHES:
			raise ut.ConfigurationError('unknown branch ' + str(branch))
		beta = [float(b) for b in beta]
		if len(beta) != 4 or not np.all(np.isfinite(beta)):
			raise ut.ContractError('a branch mapping needs four finite parameters, got ' + str(beta))
		self.branch = branch
		self.beta = beta
		self.residual = residual
		self.n_points = n_points
		self.data_fingerprint = data_fingerprint

	@property
	def increasing(self):
		return self.beta[0] * self.beta[1] > 0

	def __call__(self, q):
		return map_branch(q, self)

	def to_dict(self):
		return {'branch': self.branch, 'beta': self.beta, 'residual': self.residual,
			'n_points': self.n_points, 'data_fingerprint': self.data_fingerprint}

	@classmethod
	def from_dict(cls, d):
		return cls(d['branch'], d['beta'], d.get('residual'), d.get('n_points', 0),
			d.get('data_fingerprint', ''))

class FusedScore:
	""" Raw and mapped scores of both branches and their fusion """
	def __init__(self, q_deep, q_trad, q_tilde_deep, q_tilde_trad):
		self.q_deep = q_deep
		self.q_trad = q_trad
		self.q_tilde_deep = q_tilde_deep
		self.q_tilde_trad = q_tilde_trad
		self.Q = fuse_scores(q_tilde_deep, q_tilde_trad)

	def to_dict(self):
		return {'q_deep': self.q_deep, 'q_trad': self.q_trad, 'q_tilde_deep': self.q_tilde_deep,
			'q_tilde_trad': self.q_tilde_trad, 'Q': self.Q}

class CalibrationSet:
	""" The frozen mappings of both branches """
	def __init__(self, mappings=None):
		self.mappings = {}
		for m in (mappings or []):
			self.mappings[m.branch] = m

	def __contains__(self, branch):
		return branch in self.mappings

	def __getitem__(self, branch):
		try:
			return self.mappings[branch]
		except KeyError:
			raise ut.ConfigurationError('calibration has no mapping for the ' + branch + ' branch')

	# inputs: raw deep and traditional scores
	# output: a FusedScore; raises PartialResultError if either score is missing
	def fuse(self, q_deep, q_trad):
		qd = None if q_deep is None else float(map_branch(q_deep, self['deep']))
		qt = None if q_trad is None else float(map_branch(q_trad, self['trad']))
		return FusedScore(q_deep, q_trad, qd, qt)

	def to_dict(self):
		return {'format_version': 1,
			'mappings': [self.mappings[b].to_dict() for b in sorted(self.mappings)]}

	@classmethod
	def from_dict(cls, d):
		if not isinstance(d, dict) or d.get('format_version') != 1:
			v = d.get('format_version') if isinstance(d, dict) else None
			raise ut.MalformedInputError('unsupported calibration format version ' + str(v))
		try:
			return cls([BranchMapping.from_dict(m) for m in d['mappings']])
		except (KeyError, TypeError, ValueError) as err:
			raise ut.MalformedInputError('incomplete calibration (missing or invalid ' + str(err) + ')')

	def save(self, path):
		with open(path, 'w') as f:
			ut.dump_json(self.to_dict(), f)

	@classmethod
	def load(cls, path):
		try:
			with open(path) as f:
				d = json.load(f)
		except (ValueError, KeyError) as err:
			raise ut.MalformedInputError(path + ': not a calibration file (' + str(err) + ')')
		try:
			return cls.from_dict(d)
		except ut.MalformedInputError as err:
			raise ut.MalformedInputError(path + ': ' + err.message)

# inputs: raw branch score(s) and a mapping
# output: the mapped score(s)
def map_branch(q, m):
	if not np.all(np.isfinite(q)):
		raise ut.NumericError('non-finite score passed to the ' + m.branch + ' mapping')
	return logistic4(q, *m.beta)

# inputs: raw scores of a branch, the matching MOS values and the branch tag
# output: a monotone increasing BranchMapping fitted by damped least squares
def fit_branch_mapping(scores, mos, branch='deep'):
	q = np.asarray(scores, dtype=np.float64)
	y = np.asarray(mos, dtype=np.float64)
	if q.shape != y.shape or q.ndim != 1:
		raise ut.ContractError('scores and MOS must be equally long vectors')
	if len(q) < MIN_POINTS:
		raise ut.FitError('a mapping fit needs at least ' + str(MIN_POINTS) +
			' points, got ' + str(len(q)))
	if np.ptp(q) == 0 or np.ptp(y) == 0:
		raise ut.FitError('degenerate mapping fit: scores or MOS have no variance')
	x0 = np.array([np.ptp(y), 4. / np.ptp(q), np.median(q), np.mean(y)])
	res = lambda b: logistic4(q, *b) - y
	fit = least_squares(res, x0, method='lm', xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
	beta = fit.x
	if beta[0] < 0 and beta[1] < 0:
		beta = np.array([-beta[0], -beta[1], beta[2], beta[3]])
	if not (beta[0] * beta[1] > 0):
		log.warning('%s mapping came out non-increasing, refitting with bounds', branch)
		lo = [0, 1e-12, -np.inf, -np.inf]
		x0[0] = max(x0[0], 1e-6)
		fit = least_squares(res, x0, method='trf', bounds=(lo, np.inf), xtol=1e-15, ftol=1e-15)
		beta = fit.x
	rms = float(np.sqrt(np.mean(fit.fun**2)))
	if not fit.success or not np.all(np.isfinite(beta)) or not (beta[0] * beta[1] > 0):
		raise ut.FitError('the ' + branch + ' mapping fit did not converge: ' + fit.message,
			params=list(beta), residual=rms)
	fp = ut.fingerprint({'scores': q.tolist(), 'mos': y.tolist()})
	log.info('%s mapping: beta = %s, rms residual %.4g', branch, np.array2string(beta, precision=4), rms)
	return BranchMapping(branch, beta, rms, len(q), fp)

# inputs: mapped deep and traditional scores
# output: their mean
def fuse_scores(q_tilde_deep, q_tilde_trad):
	missing = [n for n, v in [('deep', q_tilde_deep), ('trad', q_tilde_trad)] if v is None]
	if missing:
		raise ut.PartialResultError('cannot fuse: missing the ' + ' and '.join(missing) + ' branch score')
	return (q_tilde_deep + q_tilde_trad) / 2
