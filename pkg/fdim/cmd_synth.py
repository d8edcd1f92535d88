# This file generates a synthetic corpus of procedural reference clips, their distorted versions
# and a manifest with pseudo-MOS

from fdim.lib import util as ut
from fdim.lib import args as ag
from fdim.lib import synth
import argparse
import sys

def add_arguments(parser):
	parser.add_argument('--out', required=True, help='output directory')
	parser.add_argument('--n-refs', type=int, default=8, help='number of references, default 8')
	parser.add_argument('--kinds', nargs='+', default=['gaussian-blur', 'block-quantization'],
		choices=synth.KINDS, help='distortion kinds')
	parser.add_argument('--levels', nargs='+', type=int, default=synth.LEVELS, help='severity levels 1 to 5')
	parser.add_argument('--width', type=int, default=256)
	parser.add_argument('--height', type=int, default=256)
	parser.add_argument('--frames', type=int, default=50, help='frames per clip')
	parser.add_argument('--fps', type=float, default=25.)
	parser.add_argument('--workers', type=int, default=1, help='parallel processes over references')
	ag.add_common(parser)

def main(args):
	rc = ag.RunConfig('synth', args)
	recipes = [synth.DistortionRecipe(k, l, rc.seed) for k in rc.kinds for l in rc.levels]
	path = synth.generate_corpus(rc.n_refs, recipes, rc.out, rc.seed, rc.width, rc.height, rc.frames,
		rc.fps, rc.workers)
	print(path)
	return ut.EXIT_OK

def run():
	parser = argparse.ArgumentParser(description="Examples: \n" +\
		"fdim synth --out corpus --n-refs 8 --kinds gaussian-blur block-quantization --seed 1")
	add_arguments(parser)
	from fdim.cli import execute
	sys.exit(execute(main, parser.parse_args()))

if __name__ == "__main__":
	run()
