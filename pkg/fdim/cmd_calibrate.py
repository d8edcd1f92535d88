# This file fits the four-parameter logistic mappings of both quality branches on a manifest
# and writes them as a calibration file, optionally freezing them into the checkpoint

from fdim.lib import util as ut
from fdim.lib import args as ag
from fdim.lib import manifest as mf
from fdim.lib import vmaf
from fdim.lib import scoring as sc
from fdim.lib.fit import CalibrationSet, fit_branch_mapping
from fdim.lib.model import embed_calibration
import argparse
import logging
import sys

log = logging.getLogger('fdim.calibrate')

def add_arguments(parser):
	parser.add_argument('--manifest', required=True, help='calibration manifest CSV')
	parser.add_argument('-o', '--output', required=True, help='calibration file to write')
	parser.add_argument('--embed', action='store_true', help='also store the calibration in the checkpoint')
	ag.add_frames(parser)
	ag.add_display(parser)
	ag.add_scoring(parser)
	ag.add_common(parser)

def main(args):
	rc = ag.RunConfig('fit-calibration', args)
	rc.require('weights')
	rc.check_exists('manifest', 'weights', 'vmaf_scores')
	df = mf.read_manifest(rc.manifest)
	pre = vmaf.load_precomputed(rc.vmaf_scores) if rc.vmaf_scores else None
	tool = vmaf.VmafTool(rc.vmaf_bin, precomputed=pre)
	ut.seed_everything(rc.seed)
	model, _, _ = sc.load_scorer(rc.weights)
	results, failures = sc.score_manifest(df, model, rc.sample_spec(), tool, rc.display_model())
	if failures:
		log.warning('%d rows left out of the calibration', len(failures))
	mos = [r['mos'] for r in results]
	mappings = [fit_branch_mapping([r['q_deep'] for r in results], mos, 'deep'),
		fit_branch_mapping([r['q_trad'] for r in results], mos, 'trad')]
	calibration = CalibrationSet(mappings)
	calibration.save(rc.output)
	if rc.embed:
		embed_calibration(rc.weights, calibration)
		log.info('calibration frozen into %s', rc.weights)
	return ut.EXIT_OK

def run():
	parser = argparse.ArgumentParser(description="Examples: \n" +\
		"fdim fit-calibration --manifest cal.csv --weights fdim.pt --vmaf-scores vmaf.csv -o cal.json --embed")
	add_arguments(parser)
	from fdim.cli import execute
	sys.exit(execute(main, parser.parse_args()))

if __name__ == "__main__":
	run()
