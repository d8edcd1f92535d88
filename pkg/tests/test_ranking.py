import dataclasses
import math
import numpy as np
import pytest
import torch
from scipy.special import ndtr

from fdim.lib import config as cf
from fdim.lib import ranking as rk
from fdim.lib import util as ut

def rec(ref, dist, mos=3., std=0.5, group='traditional'):
	return rk.SubjectiveRecord(ref, dist, mos, std, 'x', group)

def phi_oracle(x):
	return 0.5 * (1 + math.erf(x / math.sqrt(2)))

def test_gt_preference_examples():
	assert rk.gt_preference(3., 0.4, 3., 0.9) == 0.5
	assert rk.gt_preference(4., 0.6, 3., 0.8) == pytest.approx(0.841344746, abs=1e-9)
	assert rk.gt_preference(4., 0., 3., 0.) == 1.
	assert rk.gt_preference(3., 0., 3., 0.) == 0.5
	assert rk.gt_preference(2., 0., 3., 0.) == 0.

def test_gt_preference_against_oracle():
	rng = np.random.default_rng(0)
	mu = rng.uniform(1, 5, (1000, 2))
	s = rng.uniform(0.05, 1.5, (1000, 2))
	g = rk.gt_preference(mu[:, 0], s[:, 0], mu[:, 1], s[:, 1])
	back = rk.gt_preference(mu[:, 1], s[:, 1], mu[:, 0], s[:, 0])
	expect = [phi_oracle((a - b) / math.sqrt(c * c + d * d)) for (a, b), (c, d) in zip(mu, s)]
	assert np.max(np.abs(g - expect)) < 1e-12
	np.testing.assert_allclose(g + back, 1., atol=1e-12)

def test_gt_preference_monotone_in_mos():
	mu = np.linspace(1, 5, 50)
	g = rk.gt_preference(mu, 0.5, 3., 0.5)
	assert np.all(np.diff(g) > 0)
	g = rk.gt_preference(3., 0.5, mu, 0.5)
	assert np.all(np.diff(g) < 0)

def test_predicted_preference_against_oracle():
	rng = np.random.default_rng(1)
	q = torch.from_numpy(rng.normal(0, 2, (1000, 2)))
	s = torch.from_numpy(rng.uniform(1e-3, 2, (1000, 2)))
	p = rk.predicted_preference(q[:, 0], s[:, 0], q[:, 1], s[:, 1]).numpy()
	expect = [phi_oracle((a - b) / math.sqrt(c * c + d * d)) for (a, b), (c, d) in zip(q.tolist(), s.tolist())]
	assert np.max(np.abs(p - expect)) < 1e-12

def test_predicted_preference_examples():
	t = lambda v: torch.tensor(v, dtype=torch.float64)
	assert rk.predicted_preference(t(2.), t(0.3), t(2.), t(0.7)).item() == 0.5
	d = math.sqrt(0.3**2 + 0.4**2)
	assert rk.predicted_preference(t(1. + d), t(0.3), t(1.), t(0.4)).item() == pytest.approx(0.841344746, abs=1e-9)

def test_predicted_preference_gradient():
	args = tuple(torch.tensor([v], dtype=torch.float64, requires_grad=True) for v in (0.7, 0.4, -0.2, 0.9))
	assert torch.autograd.gradcheck(rk.predicted_preference, args, eps=1e-6, atol=1e-10, rtol=1e-6)

def test_fidelity_loss_examples():
	assert rk.fidelity_loss(1., 1.) == 0.
	assert rk.fidelity_loss(0., 0.) == 0.
	assert rk.fidelity_loss(0., 1.) == 1.
	for g in np.linspace(0, 1, 11):
		assert rk.fidelity_loss(g, 0.5) == pytest.approx(0.5, abs=1e-15)

def test_fidelity_loss_against_oracle_and_swap():
	rng = np.random.default_rng(2)
	g = rng.random(1000)
	p = rng.random(1000)
	L = rk.fidelity_loss(g, p)
	assert np.max(np.abs(L - np.array([1 - a * b - (1 - a) * (1 - b) for a, b in zip(g, p)]))) < 1e-12
	np.testing.assert_allclose(rk.fidelity_loss(1 - g, 1 - p), L, atol=1e-12)
	assert L.min() >= 0 and L.max() <= 1

@pytest.mark.parametrize('g, p', [(1.2, 0.5), (0.5, -0.1)])
def test_fidelity_loss_out_of_range(g, p):
	with pytest.raises(ut.ContractError):
		rk.fidelity_loss(g, p)

def test_loss_composite_gradient():
	g = torch.tensor([0.3, 0.9], dtype=torch.float64)
	def f(qi, si, qj, sj):
		return rk.fidelity_loss(g, rk.predicted_preference(qi, si, qj, sj)).mean()
	args = tuple(torch.tensor(v, dtype=torch.float64, requires_grad=True)
		for v in ([0.1, 1.2], [0.5, 0.3], [-0.4, 0.8], [0.7, 0.2]))
	assert torch.autograd.gradcheck(f, args, eps=1e-6, atol=1e-8, rtol=1e-4)

def test_pair_kinds_are_checked():
	with pytest.raises(ut.ContractError):
		rk.TrainPair(rec('a', 'a1'), rec('b', 'b1'), 'homogeneous')
	with pytest.raises(ut.ContractError):
		rk.TrainPair(rec('a', 'a1'), rec('a', 'a2'), 'heterogeneous')
	with pytest.raises(ut.ContractError):
		rk.TrainPair(rec('a', 'a1'), rec('a', 'a1'), 'homogeneous')
	p = rk.TrainPair(rec('a', 'a1', 4.), rec('a', 'a2', 3.), 'homogeneous')
	assert p.g + p.swapped().g == pytest.approx(1.)

def test_record_invariants():
	with pytest.raises(ut.ContractError):
		rk.SubjectiveRecord('a', 'a1', 3., -0.1)
	with pytest.raises(ut.ContractError):
		rk.SubjectiveRecord('a', 'a1', 3., 0.1, codec_group='hybrid')

def test_one_reference_three_versions():
	pairs = rk.build_pairs([rec('a', 'a%d' % i, 2. + i) for i in range(3)], cf.TrainConfig())
	assert rk.pair_counts(pairs) == {'homogeneous': 3, 'heterogeneous': 0}
	assert sorted(sorted(p.ids()) for p in pairs) == [['a0', 'a1'], ['a0', 'a2'], ['a1', 'a2']]

def test_two_references_one_version():
	pairs = rk.build_pairs([rec('a', 'a1'), rec('b', 'b1')], cf.TrainConfig())
	assert rk.pair_counts(pairs) == {'homogeneous': 0, 'heterogeneous': 1}

def test_too_few_records():
	with pytest.raises(ut.ConfigurationError):
		rk.build_pairs([rec('a', 'a1')], cf.TrainConfig())

def corpus(n_refs=10, n_dist=6):
	rng = np.random.default_rng(7)
	return [rec('r%02d' % k, 'r%02d_d%d' % (k, i), rng.uniform(1, 5), 0.4, 'neural' if i % 2 else 'traditional')
		for k in range(n_refs) for i in range(n_dist)]

def test_pairs_are_deterministic():
	c = cf.TrainConfig(seed=5)
	a = [(p.ids(), p.kind) for p in rk.build_pairs(corpus(), c)]
	b = [(p.ids(), p.kind) for p in rk.build_pairs(corpus(), c)]
	assert a == b
	other = [(p.ids(), p.kind) for p in rk.build_pairs(corpus(), dataclasses.replace(c, seed=6))]
	assert a != other

def test_pair_budget_and_participation():
	recs = corpus(20, 8)
	pairs = rk.build_pairs(recs, cf.TrainConfig(pairs_per_video=6))
	counts = rk.pair_counts(pairs)
	per_kind = round(len(recs) * 6 / 4)
	assert counts == {'homogeneous': per_kind, 'heterogeneous': per_kind}
	seen = {}
	for p in pairs:
		for d in p.ids():
			seen[d] = seen.get(d, 0) + 1
	assert sum(seen.values()) == 6 * len(recs)
	for p in pairs:
		if p.kind == 'homogeneous':
			assert p.left.ref_id == p.right.ref_id and p.left.dist_id != p.right.dist_id
		else:
			assert p.left.ref_id != p.right.ref_id

def test_data_fraction_restricts_references():
	recs = corpus(20, 4)
	c = cf.TrainConfig(data_fraction=0.1, seed=3)
	pairs = rk.build_pairs(recs, c)
	refs = set(r for p in pairs for r in (p.left.ref_id, p.right.ref_id))
	assert len(refs) == 2
	assert rk.select_references(sorted(set(r.ref_id for r in recs)), 0.05, np.random.default_rng(0)).__len__() == 1
	assert len(rk.select_references(['r%d' % k for k in range(100)], 0.3, np.random.default_rng(0))) == 30

def test_mos_filter_and_codec_mix():
	recs = corpus(6, 4) + [rec('r00', 'over', 5.5)]
	c = cf.TrainConfig(codec_mix='traditional-only')
	pairs = rk.build_pairs(recs, c)
	used = set(d for p in pairs for d in p.ids())
	assert 'over' not in used
	assert all(p.left.codec_group == 'traditional' and p.right.codec_group == 'traditional' for p in pairs)

def test_heterogeneous_sampling_beyond_enumeration(monkeypatch):
	monkeypatch.setattr(rk, 'ENUMERATION_LIMIT', 10)
	pairs = rk.build_pairs(corpus(12, 3), cf.TrainConfig(pairs_per_video=4))
	het = [tuple(p.ids()) for p in pairs if p.kind == 'heterogeneous']
	assert len(het) == round(36 * 4 / 4)
	assert len(set(tuple(sorted(h)) for h in het)) == len(het)

def test_default_train_config():
	c = cf.TrainConfig()
	assert c.lr == 1e-4
	assert c.betas == (0.9, 0.999)
	assert c.weight_decay == 5e-4
	assert c.batch == 8
	assert c.epochs == 1
	assert c.crop == 512
	assert c.flip_p == 0.5
	assert c.frames == 'one-per-second'
	assert c.pairs_per_video == 20
	assert c.data_fraction == 1.0
	assert c.codec_mix == 'mixed'
