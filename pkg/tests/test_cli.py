import hashlib
import json
import os
import shutil
import pandas as pd
import pytest
import torch

from fdim import cli
from fdim import cmd_calibrate
from fdim.lib import util as ut
from fdim.lib.fit import BranchMapping
from fdim.lib.model import load_checkpoint

TOY = ['--set', 'backbone=toy', '--set', 'pretrained=false', '--set', 'toy_channels=4',
	'--set', 'hidden=16,8', '--set', 'reduction=2', '--set', 'spatial_kernel=3']

def fdim(argv):
	with pytest.raises(SystemExit) as ex:
		cli.run(argv)
	return ex.value.code

def pair_args(tiny_manifest, row=0):
	r = tiny_manifest.iloc[row]
	return ['--ref', r['ref_path'], '--dist', r['dist_path'], '--width', '64', '--height', '64', '--fps', '5']

def test_synth(tmp_path, capsys):
	out = str(tmp_path / 'c')
	assert fdim(['synth', '--out', out, '--n-refs', '2', '--levels', '1', '3', '--width', '32',
		'--height', '32', '--frames', '2', '-q']) == 0
	path = capsys.readouterr().out.strip()
	assert path == os.path.join(out, 'manifest.csv')
	assert len(pd.read_csv(path)) == 2 * 2 * 2

def test_score_twice_is_byte_identical(tmp_path, tiny_manifest, tiny_checkpoint):
	outs = []
	for name in ['a.json', 'b.json']:
		out = str(tmp_path / name)
		assert fdim(['score'] + pair_args(tiny_manifest) + ['--weights', tiny_checkpoint, '--deep-only',
			'--seed', '3', '-o', out]) == 0
		with open(out, 'rb') as f:
			outs.append(f.read())
	assert outs[0] == outs[1]
	doc = json.loads(outs[0])
	assert doc['frame_indices'] == [0, 5]
	assert doc['Q'] is None and doc['q_trad'] is None
	assert doc['sigma_hat'] > 0
	assert 'torch' in doc['tool_versions']

def test_score_to_stdout(tiny_manifest, tiny_checkpoint, capsys):
	assert fdim(['score'] + pair_args(tiny_manifest) + ['--weights', tiny_checkpoint, '--deep-only',
		'--frames', 'all']) == 0
	assert len(json.loads(capsys.readouterr().out)['per_frame']) == 10

def test_score_needs_geometry(tiny_manifest, tiny_checkpoint):
	r = tiny_manifest.iloc[0]
	assert fdim(['score', '--ref', r['ref_path'], '--dist', r['dist_path'], '--height', '64',
		'--weights', tiny_checkpoint, '--deep-only']) == 2

def test_score_without_tool_or_calibration(tiny_manifest, tiny_checkpoint, tmp_path):
	assert fdim(['score'] + pair_args(tiny_manifest) + ['--weights', tiny_checkpoint,
		'--vmaf-bin', str(tmp_path / 'nothing')]) == 3
	csv = tmp_path / 'vmaf.csv'
	csv.write_text('dist_id,vmaf_score\n' + tiny_manifest.iloc[0]['dist_id'] + ',80\n')
	assert fdim(['score'] + pair_args(tiny_manifest) + ['--weights', tiny_checkpoint,
		'--vmaf-scores', str(csv)]) == 2

def test_score_wrong_size(tiny_manifest, tiny_checkpoint):
	r = tiny_manifest.iloc[0]
	assert fdim(['score', '--ref', r['ref_path'], '--dist', r['dist_path'], '--width', '64',
		'--height', '62', '--weights', tiny_checkpoint, '--deep-only']) == 4

def test_empty_manifest(tmp_path, tiny_checkpoint):
	p = tmp_path / 'empty.csv'
	p.write_text('')
	assert fdim(['evaluate', '--manifest', str(p), '--weights', tiny_checkpoint, '--out', str(tmp_path)]) == 2

def test_evaluate_with_split(tmp_path, tiny_corpus, tiny_checkpoint):
	out = tmp_path / 'eval'
	assert fdim(['evaluate', '--manifest', tiny_corpus, '--weights', tiny_checkpoint, '--out', str(out),
		'--split', 'codec_group', '--frames', 'stride-5']) == 0
	doc = json.loads((out / 'report.json').read_text())
	assert doc['n_scored'] == doc['n_rows'] == 16
	pooled = doc['protocols']['all-sequence']
	assert pooled['subsets']['codec_group=neural']['n'] + pooled['subsets']['codec_group=traditional']['n'] == 16
	assert doc['protocols']['per-sequence']['overall']['groups'] == 4
	rows = pd.read_csv(out / 'report.csv')
	assert len(rows) == 16
	assert {'pred', 'mapped', 'mos', 'q_deep', 'sigma_hat'} <= set(rows.columns)

def test_evaluate_unknown_split(tmp_path, tiny_corpus, tiny_checkpoint):
	assert fdim(['evaluate', '--manifest', tiny_corpus, '--weights', tiny_checkpoint, '--out', str(tmp_path),
		'--split', 'bitrate']) == 2

def train_args(manifest, out):
	return ['train', '--manifest', manifest, '--out', out, '--ablation', 'use_deformable=false',
		'--set', 'crop=64', '--set', 'frames=stride-5', '--set', 'max_frames=1', '--set', 'pairs_per_video=1',
		'--set', 'batch=4', '--set', 'lr=1e-3', '-q'] + TOY

def test_train_records_ablation_and_repeats(tmp_path, tiny_corpus):
	a, b = str(tmp_path / 'a'), str(tmp_path / 'b')
	assert fdim(train_args(tiny_corpus, a)) == 0
	assert fdim(train_args(tiny_corpus, b)) == 0
	with open(os.path.join(a, 'loss.csv'), 'rb') as fa, open(os.path.join(b, 'loss.csv'), 'rb') as fb:
		assert fa.read() == fb.read()
	model, ck = load_checkpoint(os.path.join(a, 'checkpoint.pt'))
	assert ck['model_config']['use_deformable'] is False
	assert ck['train_config']['model']['use_deformable'] is False
	report = json.loads(open(os.path.join(a, 'train_report.json')).read())
	assert report['fingerprint'] == ck['fingerprint']
	assert report['pair_counts']['homogeneous'] > 0
	with open(tiny_corpus, 'rb') as f:
		assert report['manifest_sha256'] == hashlib.sha256(f.read()).hexdigest()

def test_train_bad_ablation(tmp_path, tiny_corpus):
	assert fdim(['train', '--manifest', tiny_corpus, '--out', str(tmp_path), '--ablation', 'dropout=0.1']) == 2
	assert fdim(['train', '--manifest', tiny_corpus, '--out', str(tmp_path), '--set', 'data_fraction=0']) == 2

def test_calibrate_and_fused_score(tmp_path, tiny_manifest, tiny_corpus, tiny_checkpoint, monkeypatch, capsys):
	weights = str(tmp_path / 'w.pt')
	shutil.copy(tiny_checkpoint, weights)
	csv = tmp_path / 'vmaf.csv'
	csv.write_text('dist_id,vmaf_score\n' + ''.join('%s,%d\n' % (d, 40 + 3 * k)
		for k, d in enumerate(tiny_manifest['dist_id'])))
	seen = {}
	def fake_fit(scores, mos, branch='deep'):
		seen[branch] = list(scores)
		beta = (2., 1., 0., 3.) if branch == 'deep' else (4., 0.1, 60., 3.)
		return BranchMapping(branch, beta, 0., len(scores))
	monkeypatch.setattr(cmd_calibrate, 'fit_branch_mapping', fake_fit)
	cal = str(tmp_path / 'cal.json')
	assert fdim(['fit-calibration', '--manifest', tiny_corpus, '--weights', weights, '--vmaf-scores', str(csv),
		'-o', cal, '--embed', '--frames', 'stride-5']) == 0
	assert len(seen['deep']) == len(seen['trad']) == 16
	assert seen['trad'][0] == 40
	assert load_checkpoint(weights)[1]['calibration']['mappings'][0]['branch'] == 'deep'
	assert fdim(['score'] + pair_args(tiny_manifest) + ['--weights', weights, '--vmaf-scores', str(csv)]) == 0
	doc = json.loads(capsys.readouterr().out)
	assert doc['q_trad'] == 40
	assert doc['Q'] == pytest.approx((doc['q_tilde_deep'] + doc['q_tilde_trad']) / 2)
	assert doc['tool_versions']['vmaf'] == 'precomputed'

def test_inspect_features(tmp_path, tiny_manifest, tiny_checkpoint, capsys):
	out = tmp_path / 'maps'
	assert fdim(['inspect-features'] + pair_args(tiny_manifest) + ['--weights', tiny_checkpoint,
		'--frame', '5', '--out', str(out)]) == 0
	written = json.loads(capsys.readouterr().out)
	assert len(written) == 8
	assert all(os.path.exists(p) for paths in written.values() for p in paths)
	assert fdim(['inspect-features'] + pair_args(tiny_manifest) + ['--weights', tiny_checkpoint,
		'--frame', '10', '--out', str(out)]) == 2

def test_bench(tmp_path):
	out = tmp_path / 'bench.json'
	assert fdim(['bench', '--width', '64', '--height', '64', '--n-frames', '10', '--fps', '5',
		'--threads', '1', '-o', str(out), '--ablation', 'use_msf_attention=false'] + TOY) == 0
	doc = json.loads(out.read_text())
	assert doc['frames_scored'] == 2
	assert doc['model_config']['use_msf_attention'] is False
	assert doc['param_count'] > 0
