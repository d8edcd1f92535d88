## Correlation statistics between objective predictions and subjective scores,
# the five-parameter logistic mapping applied before PLCC,
# and the per-sequence / all-sequence evaluation protocols.

from fdim.lib import util as ut
import logging
import numpy as np
import pandas as pd
from scipy import stats
from scipy.optimize import curve_fit
from scipy.special import expit

log = logging.getLogger('fdim.stats')

PROTOCOLS = ['per-sequence', 'all-sequence']
# smallest reference group used in per-sequence averaging
MIN_GROUP = 3
# smallest set on which the five-parameter mapping is fitted
MIN_FIT = 6

class EvalRecord:
	""" An (objective, subjective) pair for one distorted video, with its subset tags """
	def __init__(self, dist_id, ref_id, pred, mos, tags=None):
		if not (np.isfinite(pred) and np.isfinite(mos)):
			raise ut.NumericError('non-finite prediction or MOS for ' + str(dist_id))
		self.dist_id = dist_id
		self.ref_id = ref_id
		self.pred = float(pred)
		self.mos = float(mos)
		self.tags = dict(tags or {})

class EvalReport:
	""" Correlations of one evaluation protocol, overall and per subset,
	together with the fitted mapping and the per-record series for plotting """
	def __init__(self, protocol):
		self.protocol = protocol
		self.overall = {}
		self.subsets = {}
		self.mapping = {}
		self.notes = []
		self.rows = []

	def to_dict(self):
		return {'protocol': self.protocol, 'overall': self.overall, 'subsets': self.subsets,
			'mapping': self.mapping, 'notes': self.notes}

	def to_frame(self):
		return pd.DataFrame(self.rows)

# five-parameter logistic with a linear term
def logistic5(q, b1, b2, b3, b4, b5):
	return b1 * (0.5 - expit(-b2 * (q - b3))) + b4 * q + b5

def _check_pair(x, y, n_min=3):
	x = np.asarray(x, dtype=np.float64)
	y = np.asarray(y, dtype=np.float64)
	if x.shape != y.shape or x.ndim != 1:
		raise ut.ContractError('correlation needs two equally long vectors')
	if len(x) < n_min:
		raise ut.ContractError('correlation needs at least ' + str(n_min) + ' points, got ' + str(len(x)))
	return x, y

# Pearson linear correlation coefficient
def compute_plcc(x, y):
	x, y = _check_pair(x, y)
	if np.ptp(x) == 0 or np.ptp(y) == 0:
		raise ut.DegenerateError('PLCC is undefined for a constant vector')
	r = stats.pearsonr(x, y)[0]
	return float(np.clip(r, -1, 1))

# Spearman rank-order correlation coefficient, ties get average ranks
def compute_srocc(x, y):
	x, y = _check_pair(x, y)
	if np.ptp(x) == 0 or np.ptp(y) == 0:
		raise ut.DegenerateError('SROCC is undefined for a constant vector')
	return compute_plcc(stats.rankdata(x, method='average'), stats.rankdata(y, method='average'))

def compute_rmse(x, y):
	x, y = _check_pair(x, y, 1)
	return float(np.sqrt(np.mean((x - y)**2)))

# inputs: predictions and subjective scores
# output: mapped predictions, the five mapping parameters (None for identity) and a warning or None;
# the affine least-squares fit is kept whenever the logistic fit does not improve on it
def fit_eval_logistic(pred, mos):
	q, y = _check_pair(pred, mos, 1)
	if len(q) < MIN_FIT or np.ptp(q) == 0 or np.ptp(y) == 0:
		w = 'degenerate five-parameter fit (' + str(len(q)) + ' points); identity mapping used'
		log.warning(w)
		return q.copy(), None, w
	a, b = np.polyfit(q, y, 1)
	lin = [0., 1., float(np.median(q)), float(a), float(b)]
	sse_lin = np.sum((logistic5(q, *lin) - y)**2)
	p0 = [np.ptp(y), np.sign(a or 1) * 4. / np.ptp(q), np.median(q), 0., np.mean(y)]
	try:
		with np.errstate(over='ignore'):
			p, _ = curve_fit(logistic5, q, y, p0=p0, maxfev=20000)
		sse = np.sum((logistic5(q, *p) - y)**2)
		if not np.isfinite(sse):
			raise RuntimeError('non-finite residual')
	except (RuntimeError, ValueError) as err:
		log.warning('five-parameter fit failed (%s); affine mapping used', err)
		return logistic5(q, *lin), lin, None
	if sse > sse_lin:
		return logistic5(q, *lin), lin, None
	return logistic5(q, *p), [float(v) for v in p], None

# correlations of one set of mapped and raw predictions against MOS;
# degenerate correlations are reported as 0 with a note
def _correlations(mapped, pred, mos, notes, label):
	out = {'n': len(mos)}
	for key, f, x in [('plcc', compute_plcc, mapped), ('srocc', compute_srocc, pred)]:
		try:
			out[key] = f(x, mos)
		except ut.DegenerateError as err:
			notes.append(label + ': ' + err.message + '; reported as 0')
			out[key] = 0.
	out['rmse'] = compute_rmse(mapped, mos)
	return out

# inputs: records of one subset, a protocol and the report notes list
# output: correlation summary, mapping parameters and the per-record rows
def _evaluate_subset(records, protocol, notes, label):
	pred = np.array([r.pred for r in records])
	mos = np.array([r.mos for r in records])
	mapped, params, warning = fit_eval_logistic(pred, mos)
	if warning:
		notes.append(label + ': ' + warning)
	if protocol == 'all-sequence':
		if len(records) < MIN_GROUP:
			raise ut.ProtocolError(label + ': ' + str(len(records)) + ' records are too few to correlate')
		summary = _correlations(mapped, pred, mos, notes, label)
	else:
		groups = {}
		for i, r in enumerate(records):
			groups.setdefault(r.ref_id, []).append(i)
		per = []
		for ref_id in sorted(groups):
			idx = groups[ref_id]
			if len(idx) < MIN_GROUP:
				notes.append(label + ': group ' + str(ref_id) + ' skipped, ' + str(len(idx)) + ' records')
				log.warning('%s: skipping group %s with %d records', label, ref_id, len(idx))
				continue
			per.append(_correlations(mapped[idx], pred[idx], mos[idx], notes, label + '/' + str(ref_id)))
		if not per:
			raise ut.ProtocolError(label + ': no reference group has ' + str(MIN_GROUP) + ' or more records')
		summary = {k: float(np.mean([c[k] for c in per])) for k in ['plcc', 'srocc', 'rmse']}
		summary['n'] = len(records)
		summary['groups'] = len(per)
	rows = []
	for r, m in zip(records, mapped):
		row = {'dist_id': r.dist_id, 'ref_id': r.ref_id, 'pred': r.pred, 'mapped': float(m), 'mos': r.mos}
		row.update(r.tags)
		rows.append(row)
	return summary, params, rows

# inputs: evaluation records, a protocol tag and the tag names that split the records into subsets
# output: an EvalReport with overall and per-subset correlations
def evaluate_protocol(records, protocol, group_keys=()):
	if protocol not in PROTOCOLS:
		raise ut.ConfigurationError('unknown protocol ' + str(protocol))
	if not records:
		raise ut.ProtocolError('no records to evaluate')
	report = EvalReport(protocol)
	summary, params, rows = _evaluate_subset(records, protocol, report.notes, 'all')
	report.overall = summary
	report.mapping['all'] = params
	report.rows = rows
	for key in group_keys:
		values = sorted(set(str(r.tags.get(key)) for r in records))
		for v in values:
			subset = [r for r in records if str(r.tags.get(key)) == v]
			label = key + '=' + v
			try:
				summary, params, _ = _evaluate_subset(subset, protocol, report.notes, label)
			except ut.ProtocolError as err:
				report.notes.append(err.message)
				continue
			report.subsets[label] = summary
			report.mapping[label] = params
	return report
