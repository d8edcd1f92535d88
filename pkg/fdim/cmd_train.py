# This file trains the deep branch for the configured number of epochs on pairs drawn from a manifest
# and writes the checkpoint, the per-step loss log and a training report

from fdim.lib import util as ut
from fdim.lib import args as ag
from fdim.lib import config as cf
from fdim.lib import manifest as mf
from fdim.lib import ranking as rk
from fdim.lib.model import apply_ablation_config
from fdim.lib.trainer import ManifestClips, train_epoch
import argparse
import logging
import os
import sys
import urllib.error

log = logging.getLogger('fdim.train')

def add_arguments(parser):
	parser.add_argument('--manifest', required=True, help='training manifest CSV')
	parser.add_argument('--config', help='flat key = value training config file')
	parser.add_argument('--out', required=True, help='output directory for checkpoint and logs')
	parser.add_argument('--data-fraction', type=float, help='fraction of references used for pairs')
	parser.add_argument('--codec-mix', choices=cf.CODEC_MIXES, help='codec groups used for pairs')
	parser.add_argument('--device', default='cpu', help='torch device, default cpu')
	ag.add_model(parser)
	ag.add_common(parser)

def main(args):
	rc = ag.RunConfig('train', args)
	rc.check_exists('manifest', 'config')
	overrides = rc.assignments()
	if rc.data_fraction is not None:
		overrides['data_fraction'] = str(rc.data_fraction)
	if rc.codec_mix is not None:
		overrides['codec_mix'] = rc.codec_mix
	overrides.setdefault('seed', str(rc.seed))
	config = cf.load_train_config(rc.config, overrides)
	df = mf.read_manifest(rc.manifest)
	records = mf.records_from_manifest(df)
	rng = ut.seed_everything(config.seed)
	pairs = rk.build_pairs(records, config, rng)
	references = sorted(set(p.left.ref_id for p in pairs) | set(p.right.ref_id for p in pairs))
	log.info('pairs drawn from %d references', len(references))
	ablation = {k: v for k, v in overrides.items() if k in cf.MODEL_ABLATION_KEYS}
	try:
		model, config = apply_ablation_config(ablation, config.model, config)
	except (urllib.error.URLError, OSError) as err:
		raise ut.DependencyError('cannot load pretrained encoder weights (' + str(err) +
			'); retry online or pass --set pretrained=false')
	model.to(rc.device)
	os.makedirs(rc.out, exist_ok=True)
	report = train_epoch(model, pairs, ManifestClips(df), config, rc.out, rng, references)
	report['config'] = cf.config_to_dict(config)
	report['manifest'] = os.path.abspath(rc.manifest)
	report['manifest_sha256'] = ut.file_fingerprint(rc.manifest)
	with open(os.path.join(rc.out, 'train_report.json'), 'w') as f:
		ut.dump_json(report, f)
	print('checkpoint: ' + report['checkpoint'], file=sys.stderr)
	return ut.EXIT_OK

def run():
	parser = argparse.ArgumentParser(description="Examples: \n" +\
		"fdim train --manifest corpus/manifest.csv --out runs/default; " +\
		"fdim train --manifest corpus/manifest.csv --out runs/nodcn --ablation use_deformable=false " +\
		"--data-fraction 0.1 --set crop=256")
	add_arguments(parser)
	from fdim.cli import execute
	sys.exit(execute(main, parser.parse_args()))

if __name__ == "__main__":
	run()
