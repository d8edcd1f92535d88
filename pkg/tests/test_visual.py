import numpy as np
import matplotlib.pyplot as plt
import torch

from fdim.lib import visual

def test_map_image_normalization():
	fmap = torch.arange(16.).view(1, 4, 4).repeat(3, 1, 1)
	img = visual.map_image(fmap, 8, 8)
	assert img.shape == (8, 8)
	assert img.min() >= 0 and img.max() <= 1
	assert np.array_equal(visual.map_image(torch.full((2, 3, 3), 4.), 6, 5), np.zeros((6, 5)))

def test_export_feature_maps(tmp_path, tiny_model):
	rng = np.random.default_rng(0)
	ref = rng.random((3, 64, 96))
	written, images = visual.export_feature_maps(tiny_model, ref, ref.copy(), str(tmp_path), 'f0')
	assert sorted(written) == sorted(['refined_s%d' % s for s in range(1, 5)] +
		['discrepancy_s%d' % s for s in range(1, 5)])
	for key, (gray, overlay) in written.items():
		assert plt.imread(gray).shape[:2] == (64, 96)
		assert plt.imread(overlay).shape[:2] == (64, 96)
		assert images[key].shape == (64, 96)
	for s in range(1, 5):
		assert not images['discrepancy_s%d' % s].any()

def test_export_without_discrepancy(tmp_path, tiny_config):
	import dataclasses
	from fdim.lib.model import FDIMNet
	m = FDIMNet(dataclasses.replace(tiny_config, use_discrepancy_map=False))
	rng = np.random.default_rng(1)
	written, _ = visual.export_feature_maps(m, rng.random((3, 64, 64)), rng.random((3, 64, 64)), str(tmp_path))
	assert sorted(written) == ['refined_s%d' % s for s in range(1, 5)]
