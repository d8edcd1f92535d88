import os
import pytest
import torch

from fdim.lib import config as cf
from fdim.lib import synth
from fdim.lib import manifest as mf
from fdim.lib.model import FDIMNet, save_checkpoint

TINY = dict(backbone='toy', pretrained=False, toy_channels=4, toy_blocks=4, hidden=(16, 8), reduction=2,
	spatial_kernel=3)

def pytest_collection_modifyitems(config, items):
	if os.environ.get('FDIM_SLOW') == '1':
		return
	skip = pytest.mark.skip(reason='set FDIM_SLOW=1 to run')
	for item in items:
		if 'slow' in item.keywords:
			item.add_marker(skip)

@pytest.fixture
def tiny_config():
	return cf.ModelConfig(**TINY)

@pytest.fixture
def tiny_model(tiny_config):
	torch.manual_seed(0)
	return FDIMNet(tiny_config).eval()

@pytest.fixture(scope='session')
def tiny_corpus(tmp_path_factory):
	""" 4 references x 2 kinds x 2 levels of 64x64 clips, 10 frames at 5 fps """
	out = tmp_path_factory.mktemp('corpus')
	recipes = synth.default_recipes(['gaussian-blur', 'block-quantization'], [1, 4])
	return synth.generate_corpus(4, recipes, str(out), seed=3, width=64, height=64, n_frames=10, fps=5)

@pytest.fixture(scope='session')
def tiny_checkpoint(tmp_path_factory):
	torch.manual_seed(0)
	model = FDIMNet(cf.ModelConfig(**TINY))
	path = str(tmp_path_factory.mktemp('ck') / 'tiny.pt')
	save_checkpoint(path, model)
	return path

@pytest.fixture
def tiny_manifest(tiny_corpus):
	return mf.read_manifest(tiny_corpus)

