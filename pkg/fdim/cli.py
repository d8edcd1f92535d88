# The fdim command line: one subcommand per workflow, sharing error handling and exit codes.
#	0 success, 1 infrastructure failure, 2 configuration or usage error,
#	3 missing external dependency, 4 malformed input, 5 non-finite training loss

from fdim.lib import util as ut
from fdim import cmd_score, cmd_train, cmd_evaluate, cmd_calibrate, cmd_synth, cmd_inspect, cmd_bench
import argparse
import logging
import sys

COMMANDS = [
	('score', cmd_score, 'score a distorted video against its reference'),
	('train', cmd_train, 'train the deep branch with the pairwise fidelity loss'),
	('evaluate', cmd_evaluate, 'correlate scores with MOS over a manifest'),
	('fit-calibration', cmd_calibrate, 'fit the branch mappings used for fusion'),
	('synth', cmd_synth, 'generate a synthetic corpus with pseudo-MOS'),
	('inspect-features', cmd_inspect, 'export multi-scale feature maps as images'),
	('bench', cmd_bench, 'measure parameters, FLOPs and scoring time'),
]

# run a command's main function and turn fdim errors into exit codes
def execute(main, args):
	ut.setup_logging(-1 if getattr(args, 'quiet', False) else getattr(args, 'verbose', 0))
	log = logging.getLogger('fdim.cli')
	try:
		return main(args)
	except ut.FdimError as err:
		log.error('%s', err.message)
		return err.exit_code
	except FileNotFoundError as err:
		log.error('%s', err)
		return ut.EXIT_CONFIG

def build_parser():
	parser = argparse.ArgumentParser(prog='fdim', description="Examples: \n" +\
		"fdim synth --out corpus; fdim train --manifest corpus/manifest.csv --out run; " +\
		"fdim evaluate --manifest corpus/manifest.csv --weights run/checkpoint.pt --out eval")
	sub = parser.add_subparsers(dest='command', metavar='command')
	sub.required = True
	for name, module, text in COMMANDS:
		p = sub.add_parser(name, help=text, description=text)
		module.add_arguments(p)
		p.set_defaults(main=module.main)
	return parser

def run(argv=None):
	args = build_parser().parse_args(argv)
	sys.exit(execute(args.main, args))

# in case we are running this file as the main program
if __name__ == "__main__":
	run()
