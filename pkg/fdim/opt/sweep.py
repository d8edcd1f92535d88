# Runs the held-out experiments and collects one CSV row per setting
# Requires: a manifest (or none for the desk experiment, which synthesizes its corpus)
# Result: sweep.csv in the output directory
# Runtime: the desk experiment takes up to a few hours on CPU at crop 256

from fdim.lib import util as ut
from fdim.lib import config as cf
from fdim.opt import experiments as ex
import argparse
import os
import sys
import pandas as pd

def run():
	parser = argparse.ArgumentParser(description="Examples: \n" +\
		"python -m fdim.opt.sweep desk --out runs/desk; " +\
		"python -m fdim.opt.sweep fraction --manifest corpus/manifest.csv --out runs/fraction --set crop=256; " +\
		"python -m fdim.opt.sweep ablation --manifest corpus/manifest.csv --out runs/ablation")
	parser.add_argument('experiment', choices=['desk', 'fraction', 'ablation'])
	parser.add_argument('--out', required=True, help='output directory')
	parser.add_argument('--manifest', help='manifest of the fraction and ablation sweeps')
	parser.add_argument('--config', help='flat key = value training config file')
	parser.add_argument('--set', action='append', metavar='KEY=VALUE', help='configuration override')
	parser.add_argument('--n-test', type=int, default=2, help='held-out references, default 2')
	parser.add_argument('--crop', type=int, default=256, help='training crop of the desk experiment')
	parser.add_argument('--seed', type=int, default=0)
	args = parser.parse_args()
	ut.setup_logging(0)
	os.makedirs(args.out, exist_ok=True)
	try:
		if args.experiment == 'desk':
			rows = [ex.desk_experiment(args.out, args.seed, args.crop)]
		else:
			if args.manifest is None:
				raise ut.ConfigurationError('--manifest is required for the ' + args.experiment + ' sweep')
			over = cf.parse_assignments(args.set)
			over.setdefault('seed', str(args.seed))
			config = cf.load_train_config(args.config, over)
			f = ex.fraction_sweep if args.experiment == 'fraction' else ex.ablation_sweep
			rows = f(args.manifest, config, args.n_test, args.out, args.seed)
	except ut.FdimError as err:
		print(err.message, file=sys.stderr)
		sys.exit(err.exit_code)
	path = os.path.join(args.out, 'sweep.csv')
	pd.DataFrame(rows).to_csv(path, index=False, float_format='%.6g')
	print(path)

if __name__ == "__main__":
	run()
