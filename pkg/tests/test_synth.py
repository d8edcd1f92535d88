import os
import numpy as np
import pandas as pd
import pytest

from fdim.lib import manifest as mf
from fdim.lib import synth
from fdim.lib import util as ut
from fdim.lib import video as vd

def corpus(tmp_path, name, workers=1):
	return synth.generate_corpus(4, synth.default_recipes(), str(tmp_path / name), seed=11,
		width=32, height=32, n_frames=3, workers=workers)

def test_corpus_layout(tmp_path):
	df = mf.read_manifest(corpus(tmp_path, 'a'))
	assert len(df) == 4 * 2 * 5
	assert set(df['codec_group']) == {'neural', 'traditional'}
	assert df['ref_id'].nunique() == 4
	assert not mf.missing_files(df)
	ref, dist = mf.load_pair(df.iloc[0])
	assert len(ref) == len(dist) == 3
	assert ref.frames[0][0].shape == (32, 32)

def test_regeneration_is_byte_identical(tmp_path):
	a = os.path.dirname(corpus(tmp_path, 'a'))
	b = os.path.dirname(corpus(tmp_path, 'b', workers=2))
	names = sorted(os.listdir(a))
	assert names == sorted(os.listdir(b))
	for n in names:
		with open(os.path.join(a, n), 'rb') as fa, open(os.path.join(b, n), 'rb') as fb:
			assert fa.read() == fb.read(), n

def test_pseudo_mos_follows_severity():
	for kind in synth.KINDS:
		mos = [synth.pseudo_mos(synth.DistortionRecipe(kind, l))[0] for l in synth.LEVELS]
		assert all(a > b for a, b in zip(mos, mos[1:]))
		assert 1 < min(mos) and max(mos) <= 5
	assert synth.pseudo_mos(synth.DistortionRecipe('combined', 3))[1] == 0.3

def test_blur_removes_high_frequencies():
	ref = synth.make_reference(2, 64, 64, 1, 25, seed=0)
	rng = np.random.default_rng(0)
	energy = [synth.high_frequency_energy(synth.distort(ref, synth.DistortionRecipe('gaussian-blur', l), rng).frames[0][0])
		for l in [1, 5]]
	assert energy[1] < energy[0]

def test_distortions_keep_geometry_and_range():
	ref = synth.make_reference(1, 48, 32, 2, 25, seed=0)
	rng = np.random.default_rng(1)
	for kind in synth.KINDS:
		d = synth.distort(ref, synth.DistortionRecipe(kind, 5), rng)
		assert len(d) == 2
		for p, q in zip(d.frames[1], ref.frames[1]):
			assert p.shape == q.shape and p.dtype == np.uint8
		assert not np.array_equal(d.frames[0][0], ref.frames[0][0])

@pytest.mark.parametrize('kind, level', [('ringing', 1), ('gaussian-blur', 0), ('additive-noise', 6)])
def test_bad_recipe(kind, level):
	with pytest.raises(ut.ConfigurationError):
		synth.DistortionRecipe(kind, level)

def test_corpus_needs_two_references(tmp_path):
	with pytest.raises(ut.ConfigurationError):
		synth.generate_corpus(1, synth.default_recipes(), str(tmp_path))
