# This file exports the per-scale refined feature maps and discrepancy maps of one frame pair
# as grayscale and overlay images

from fdim.lib import util as ut
from fdim.lib import args as ag
from fdim.lib import video as vd
from fdim.lib import scoring as sc
from fdim.lib.visual import export_feature_maps
import argparse
import sys

def add_arguments(parser):
	parser.add_argument('--ref', required=True, help='raw reference video')
	parser.add_argument('--dist', required=True, help='raw distorted video')
	parser.add_argument('--weights', required=True, help='checkpoint file')
	parser.add_argument('--frame', type=int, default=0, help='frame index, default 0')
	parser.add_argument('--out', required=True, help='output directory for the images')
	parser.add_argument('--cmap', default='jet', help='matplotlib colormap of the overlays')
	ag.add_geometry(parser)
	ag.add_display(parser)
	ag.add_common(parser)

def main(args):
	rc = ag.RunConfig('inspect-features', args)
	rc.check_exists('ref', 'dist', 'weights')
	display = rc.display_model()
	model, _, _ = sc.load_scorer(rc.weights)
	bd = vd.PIX_FMTS[rc.pix_fmt]
	ref = vd.read_raw_video(rc.ref, rc.width, rc.height, bd, rc.fps, rc.signal_format)
	dist = vd.read_raw_video(rc.dist, rc.dist_width or rc.width, rc.dist_height or rc.height, bd,
		rc.fps, rc.signal_format)
	dist = vd.resample_to_reference(dist, ref)
	if not 0 <= rc.frame < len(ref):
		raise ut.ConfigurationError('inspect-features: --frame must be in [0, ' + str(len(ref)) + ')')
	r = sc.network_frame(ref, rc.frame, display)
	d = sc.network_frame(dist, rc.frame, display)
	written, _ = export_feature_maps(model, r, d, rc.out, 'frame%05d' % rc.frame, rc.cmap)
	ut.dump_json(written, sys.stdout)
	return ut.EXIT_OK

def run():
	parser = argparse.ArgumentParser(description="Examples: \n" +\
		"fdim inspect-features --ref ref.yuv --dist dist.yuv --width 1920 --height 1080 " +\
		"--weights fdim.pt --frame 25 --out maps/")
	add_arguments(parser)
	from fdim.cli import execute
	sys.exit(execute(main, parser.parse_args()))

if __name__ == "__main__":
	run()
