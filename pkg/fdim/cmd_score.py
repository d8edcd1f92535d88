# This file scores one distorted video against its reference with the deep and VMAF branches
# and writes the raw, mapped and fused scores as JSON

from fdim.lib import util as ut
from fdim.lib import args as ag
from fdim.lib import video as vd
from fdim.lib import vmaf
from fdim.lib import scoring as sc
import argparse
import sys

def add_arguments(parser):
	parser.add_argument('--ref', required=True, help='raw reference video')
	parser.add_argument('--dist', required=True, help='raw distorted video')
	parser.add_argument('--dist-id', help='id of the distorted video in --vmaf-scores, default its file stem')
	parser.add_argument('--deep-only', action='store_true',
		help='skip the VMAF branch; no fused score is produced')
	parser.add_argument('-o', '--output', help='JSON output file, default stdout')
	ag.add_geometry(parser)
	ag.add_frames(parser)
	ag.add_display(parser)
	ag.add_scoring(parser)
	ag.add_common(parser)

def main(args):
	rc = ag.RunConfig('score', args)
	rc.require('weights')
	rc.check_exists('ref', 'dist', 'weights', 'calibration', 'vmaf_scores')
	spec = rc.sample_spec()
	display = rc.display_model()
	tool = None
	if not rc.deep_only:
		pre = vmaf.load_precomputed(rc.vmaf_scores) if rc.vmaf_scores else None
		tool = vmaf.VmafTool(rc.vmaf_bin, precomputed=pre)
		if pre is None and not tool.available():
			raise ut.DependencyError('VMAF tool ' + repr(tool.binary) + ' not found; ' + vmaf.HINT +
				', or score with --deep-only')
	ut.seed_everything(rc.seed)
	model, calibration, _ = sc.load_scorer(rc.weights, rc.calibration)
	if calibration is None and not rc.deep_only:
		raise ut.ConfigurationError('score: fusion needs a calibration (--calibration or one embedded ' +
			'in the checkpoint), or use --deep-only')
	bd = vd.PIX_FMTS[rc.pix_fmt]
	ref = vd.read_raw_video(rc.ref, rc.width, rc.height, bd, rc.fps, rc.signal_format)
	dist = vd.read_raw_video(rc.dist, rc.dist_width or rc.width, rc.dist_height or rc.height, bd,
		rc.fps, rc.signal_format)
	dist_id = rc.dist_id or dist.name.rsplit('.', 1)[0]
	result = sc.score_pair(model, ref, dist, spec, calibration, tool, display, dist_id)
	if display is not None:
		result['display'] = display.to_dict()
	if rc.output:
		with open(rc.output, 'w') as f:
			ut.dump_json(result, f)
	else:
		ut.dump_json(result, sys.stdout)
	return ut.EXIT_OK

def run():
	parser = argparse.ArgumentParser(description="Examples: \n" +\
		"fdim score --ref ref.yuv --dist dist.yuv --width 1920 --height 1080 --weights fdim.pt " +\
		"--calibration cal.json --vmaf-scores vmaf.csv; " +\
		"fdim score --ref ref.yuv --dist dist.yuv --width 3840 --height 2160 --pix-fmt yuv420p10le " +\
		"--hdr --eotf pq --display-peak 1000 --weights fdim.pt --deep-only")
	add_arguments(parser)
	from fdim.cli import execute
	sys.exit(execute(main, parser.parse_args()))

if __name__ == "__main__":
	run()
