## Train-then-evaluate experiments on held-out references: the desk-scale learning check,
# the training-data fraction sweep, the codec-mix comparison and the architecture ablations.
# Every setting draws its randomness from one generator seeded by the run seed.

from fdim.lib import util as ut
from fdim.lib import config as cf
from fdim.lib import manifest as mf
from fdim.lib import ranking as rk
from fdim.lib import stats as st
from fdim.lib import synth
from fdim.lib import scoring as sc
from fdim.lib import video as vd
from fdim.lib.model import apply_ablation_config
from fdim.lib.trainer import ManifestClips, train_epoch
import dataclasses
import logging
import os
import time
import numpy as np

log = logging.getLogger('fdim.experiments')

FRACTIONS = [0.01, 0.05, 0.1, 0.3, 0.5, 1.0]
# each ablation setting changes one component of the default model
ABLATIONS = [
	{},
	{'offset_source': 'distorted'},
	{'offset_source': 'discrepancy'},
	{'offset_source': 'concatenated'},
	{'use_discrepancy_map': 'false'},
	{'use_deformable': 'false'},
	{'use_msf_attention': 'false'},
]

# inputs: manifest DataFrame, number of held-out references and the generator
# output: sorted training and test reference ids
def split_references(df, n_test, rng):
	refs = sorted(set(df['ref_id']))
	if n_test >= len(refs):
		raise ut.ConfigurationError('cannot hold out ' + str(n_test) + ' of ' + str(len(refs)) + ' references')
	test = sorted(refs[i] for i in rng.choice(len(refs), size=n_test, replace=False))
	return sorted(set(refs) - set(test)), test

# inputs: scored rows with a 'level' and 'codec' per row
# output: fraction of adjacent severity levels within a (reference, kind) family whose
# 	deep scores are not strictly decreasing
def ordering_violations(results):
	fam = {}
	for r in results:
		fam.setdefault((r['ref_id'], r['codec']), []).append((r['level'], r['q_deep']))
	bad = total = 0
	for items in fam.values():
		items.sort()
		for (l1, q1), (l2, q2) in zip(items, items[1:]):
			if l2 == l1 + 1:
				total += 1
				bad += q2 >= q1
	return bad / total if total else 0.

# inputs: manifest DataFrame, training and test reference ids, TrainConfig, ablation toggles,
# 	output directory and the generator
# output: summary of the trained model on the test references
def train_and_evaluate(df, train_refs, test_refs, config, ablation, out_dir, rng):
	train_df = df[df['ref_id'].isin(train_refs)]
	test_df = df[df['ref_id'].isin(test_refs)]
	pairs = rk.build_pairs(mf.records_from_manifest(train_df), config, rng)
	model, config = apply_ablation_config(ablation, config.model, config)
	start = time.time()
	report = train_epoch(model, pairs, ManifestClips(df), config, out_dir, rng)
	spec = vd.FrameSampleSpec(config.frames, config.seed)
	results, failures = sc.score_manifest(test_df, model, spec)
	for r in results:
		r['level'] = int(test_df.loc[r['row'], 'level']) if 'level' in test_df.columns else 0
	records = [st.EvalRecord(r['dist_id'], r['ref_id'], r['q_deep'], r['mos'], {'codec_group': r['codec_group']})
		for r in results]
	per = st.evaluate_protocol(records, 'per-sequence', ['codec_group'])
	pooled = st.evaluate_protocol(records, 'all-sequence', ['codec_group'])
	return {'pairs': len(pairs), 'steps': report['steps'], 'final_loss': report['loss'][-1],
		'srocc_per_sequence': per.overall['srocc'], 'plcc_per_sequence': per.overall['plcc'],
		'srocc_all': pooled.overall['srocc'], 'plcc_all': pooled.overall['plcc'],
		'violation_rate': ordering_violations(results), 'failed_rows': len(failures),
		'seconds': time.time() - start, 'test_refs': ' '.join(test_refs)}

# inputs: output directory, seed, crop, whether to use the pretrained encoder and the corpus shape
# output: the summary of train_and_evaluate, with the acceptance thresholds checked
def desk_experiment(out_dir, seed=0, crop=256, pretrained=True, n_refs=8, n_test=2, width=256, height=256,
	n_frames=50, fps=25, max_pairs=5000):
	rng = ut.seed_everything(seed)
	kinds = ['gaussian-blur', 'block-quantization']
	manifest = synth.generate_corpus(n_refs, synth.default_recipes(kinds, seed=seed),
		os.path.join(out_dir, 'corpus'), seed, width, height, n_frames, fps)
	df = mf.read_manifest(manifest)
	train_refs, test_refs = split_references(df, n_test, rng)
	model = cf.ModelConfig(pretrained=pretrained)
	config = cf.TrainConfig(crop=crop, seed=seed, model=model)
	n_train = int(df['ref_id'].isin(train_refs).sum())
	# keep the pair budget within max_pairs
	ppv = max(1, min(config.pairs_per_video, 2 * max_pairs // max(n_train, 1)))
	config = dataclasses.replace(config, pairs_per_video=ppv)
	summary = train_and_evaluate(df, train_refs, test_refs, config, {}, os.path.join(out_dir, 'train'), rng)
	summary['passed'] = summary['srocc_per_sequence'] >= 0.85 and summary['violation_rate'] <= 0.1
	log.info('desk experiment: per-sequence SROCC %.3f, ordering violations %.1f%%',
		summary['srocc_per_sequence'], 100 * summary['violation_rate'])
	return summary

# inputs: manifest path, base TrainConfig, number of held-out references, output directory and seed
# output: one summary row per data fraction and codec mix
def fraction_sweep(manifest, config, n_test, out_dir, seed=0, fractions=FRACTIONS, mixes=cf.CODEC_MIXES):
	df = mf.read_manifest(manifest)
	rows = []
	for mix in mixes:
		for f in fractions:
			rng = ut.seed_everything(seed)
			train_refs, test_refs = split_references(df, n_test, rng)
			c = dataclasses.replace(config, data_fraction=f, codec_mix=mix)
			name = 'fraction_%g_%s' % (f, mix)
			log.info('setting %s', name)
			row = train_and_evaluate(df, train_refs, test_refs, c, {}, os.path.join(out_dir, name), rng)
			row.update({'data_fraction': f, 'codec_mix': mix})
			rows.append(row)
	return rows

# inputs: manifest path, base TrainConfig, number of held-out references, output directory and seed
# output: one summary row per ablation setting
def ablation_sweep(manifest, config, n_test, out_dir, seed=0, ablations=ABLATIONS):
	df = mf.read_manifest(manifest)
	rows = []
	for ab in ablations:
		rng = ut.seed_everything(seed)
		train_refs, test_refs = split_references(df, n_test, rng)
		name = '_'.join(k + '-' + v for k, v in sorted(ab.items())) or 'default'
		log.info('setting %s', name)
		row = train_and_evaluate(df, train_refs, test_refs, config, ab, os.path.join(out_dir, name), rng)
		row['variant'] = name
		rows.append(row)
	return rows
