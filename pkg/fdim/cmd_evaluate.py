# This file scores every row of an evaluation manifest and writes PLCC/SROCC reports
# for the per-sequence and all-sequence protocols, overall and per subset

from fdim.lib import util as ut
from fdim.lib import args as ag
from fdim.lib import manifest as mf
from fdim.lib import stats as st
from fdim.lib import vmaf
from fdim.lib import scoring as sc
import argparse
import logging
import os
import sys
import pandas as pd

log = logging.getLogger('fdim.evaluate')

BRANCH_CHOICES = ['deep', 'trad', 'fused']

def add_arguments(parser):
	parser.add_argument('--manifest', required=True, help='evaluation manifest CSV')
	parser.add_argument('--out', required=True, help='output directory for report.json and report.csv')
	parser.add_argument('--branch', default='deep', choices=BRANCH_CHOICES,
		help='score to correlate: raw deep score, VMAF score or the fused score')
	parser.add_argument('--protocol', default='both', choices=st.PROTOCOLS + ['both'])
	parser.add_argument('--split', action='append', default=[],
		help='manifest column splitting the records into subsets, repeatable (e.g. codec_group)')
	ag.add_frames(parser)
	ag.add_display(parser)
	ag.add_scoring(parser)
	ag.add_common(parser)

# inputs: scored rows, the branch and the calibration
# output: EvalRecords with the chosen score as prediction
def eval_records(results, branch, calibration, splits):
	out = []
	for r in results:
		if branch == 'deep':
			pred = r['q_deep']
		elif branch == 'trad':
			pred = r['q_trad']
		else:
			pred = calibration.fuse(r['q_deep'], r['q_trad']).Q
		tags = {k: r.get(k, '') for k in ['codec_group', 'codec', 'dataset', 'subset']}
		tags.update({k: r[k] for k in splits if k in r})
		out.append(st.EvalRecord(r['dist_id'], r['ref_id'], pred, r['mos'], tags))
	return out

def main(args):
	rc = ag.RunConfig('evaluate', args)
	rc.require('weights')
	rc.check_exists('manifest', 'weights', 'calibration', 'vmaf_scores')
	df = mf.read_manifest(rc.manifest)
	unknown = [s for s in rc.split if s not in df.columns]
	if unknown:
		raise ut.ConfigurationError('evaluate: --split column(s) not in manifest: ' + ', '.join(unknown))
	tool = None
	if rc.branch != 'deep':
		pre = vmaf.load_precomputed(rc.vmaf_scores) if rc.vmaf_scores else None
		tool = vmaf.VmafTool(rc.vmaf_bin, precomputed=pre)
	ut.seed_everything(rc.seed)
	model, calibration, _ = sc.load_scorer(rc.weights, rc.calibration)
	if rc.branch == 'fused' and calibration is None:
		raise ut.ConfigurationError('evaluate: the fused branch needs a calibration')
	results, failures = sc.score_manifest(df, model, rc.sample_spec(), tool, rc.display_model())
	for r in results:
		for s in rc.split:
			r[s] = str(df.loc[r['row'], s])
	records = eval_records(results, rc.branch, calibration, rc.split)
	protocols = st.PROTOCOLS if rc.protocol == 'both' else [rc.protocol]
	doc = {'manifest': os.path.abspath(rc.manifest), 'branch': rc.branch, 'n_rows': len(df),
		'n_scored': len(records), 'failed_rows': failures, 'incomplete': bool(failures),
		'splits': rc.split, 'protocols': {}}
	last = None
	for p in protocols:
		try:
			report = st.evaluate_protocol(records, p, rc.split)
		except ut.ProtocolError as err:
			log.error('%s: %s', p, err.message)
			doc['protocols'][p] = {'error': err.message}
			continue
		doc['protocols'][p] = report.to_dict()
		last = report
		for name, summary in [('all', report.overall)] + sorted(report.subsets.items()):
			log.info('%s %s: PLCC %.4f SROCC %.4f (n=%d)', p, name, summary['plcc'], summary['srocc'], summary['n'])
	os.makedirs(rc.out, exist_ok=True)
	with open(os.path.join(rc.out, 'report.json'), 'w') as f:
		ut.dump_json(doc, f)
	rows = pd.DataFrame([dict(r, pred=rec.pred) for r, rec in zip(results, records)])
	if last is not None:
		mapped = {row['dist_id']: row['mapped'] for row in last.rows}
		rows['mapped'] = [mapped[d] for d in rows['dist_id']]
	rows.to_csv(os.path.join(rc.out, 'report.csv'), index=False, float_format='%.10g')
	if failures:
		log.warning('%d of %d rows could not be scored; see failed_rows in the report', len(failures), len(df))
	return ut.EXIT_OK if last is not None else ut.EXIT_INFRA

def run():
	parser = argparse.ArgumentParser(description="Examples: \n" +\
		"fdim evaluate --manifest corpus/manifest.csv --weights runs/default/checkpoint.pt --out eval/; " +\
		"fdim evaluate --manifest test.csv --weights fdim.pt --branch fused --vmaf-scores vmaf.csv " +\
		"--split codec_group --out eval/")
	add_arguments(parser)
	from fdim.cli import execute
	sys.exit(execute(main, parser.parse_args()))

if __name__ == "__main__":
	run()
