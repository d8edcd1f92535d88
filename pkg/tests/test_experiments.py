import dataclasses
import json
import os
import numpy as np
import pandas as pd
import pytest

from fdim.lib import config as cf
from fdim.lib import util as ut
from fdim.opt import experiments as ex
from fdim.usr import plot_report

def test_ordering_violations():
	rows = [{'ref_id': 'a', 'codec': 'blur', 'level': l, 'q_deep': q} for l, q in [(1, 5.), (2, 4.), (3, 4.5), (4, 1.)]]
	rows += [{'ref_id': 'b', 'codec': 'blur', 'level': l, 'q_deep': -l} for l in [1, 2]]
	assert ex.ordering_violations(rows) == pytest.approx(1 / 4)
	assert ex.ordering_violations([]) == 0.

def test_split_references(tiny_manifest):
	train, test = ex.split_references(tiny_manifest, 1, np.random.default_rng(0))
	assert len(test) == 1 and len(train) == 3
	assert not set(train) & set(test)
	with pytest.raises(ut.ConfigurationError):
		ex.split_references(tiny_manifest, 4, np.random.default_rng(0))

def test_train_and_evaluate(tmp_path, tiny_manifest, tiny_config):
	c = cf.TrainConfig(batch=4, crop=64, frames='stride-5', max_frames=1, pairs_per_video=1, model=tiny_config)
	rng = ut.seed_everything(0)
	train, test = ex.split_references(tiny_manifest, 1, rng)
	row = ex.train_and_evaluate(tiny_manifest, train, test, c, {'use_msf_attention': 'false'}, str(tmp_path), rng)
	assert row['test_refs'] == test[0]
	assert row['failed_rows'] == 0
	assert -1 <= row['srocc_per_sequence'] <= 1
	assert 0 <= row['violation_rate'] <= 1
	assert os.path.exists(tmp_path / 'checkpoint.pt')

@pytest.mark.slow
def test_desk_experiment(tmp_path):
	summary = ex.desk_experiment(str(tmp_path), seed=0, crop=256)
	assert summary['pairs'] <= 5000
	assert summary['passed'], summary

def test_plots(tmp_path):
	csv = tmp_path / 'report.csv'
	pd.DataFrame({'mapped': [1., 2., 3., 4.], 'mos': [1.2, 2.1, 2.8, 4.2],
		'codec_group': ['neural', 'traditional'] * 2}).to_csv(csv, index=False)
	plot_report.scatter(str(csv), str(tmp_path / 'scatter.pdf'))
	doc = {'protocols': {'per-sequence': {'subsets': {'a=1': {'srocc': 0.8}, 'a=2': {'srocc': 0.7},
		'a=3': {'srocc': 0.9}}}}}
	(tmp_path / 'report.json').write_text(json.dumps(doc))
	plot_report.radar(str(tmp_path / 'report.json'), str(tmp_path / 'radar.pdf'))
	sweep = tmp_path / 'sweep.csv'
	pd.DataFrame({'data_fraction': [0.1, 1.0, 0.1, 1.0], 'codec_mix': ['mixed'] * 2 + ['traditional-only'] * 2,
		'srocc_per_sequence': [0.5, 0.8, 0.4, 0.7]}).to_csv(sweep, index=False)
	plot_report.sweep(str(sweep), str(tmp_path / 'sweep.pdf'))
	for name in ['scatter.pdf', 'radar.pdf', 'sweep.pdf']:
		assert (tmp_path / name).stat().st_size > 0
