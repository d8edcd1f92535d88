## Frame-level quality regression and temporal aggregation.
# The head maps the fused vector to a raw score and a raw uncertainty;
# the video score is the mean of the frame scores and the uncertainty is made positive with softplus.

from fdim.lib import util as ut
import torch
import torch.nn as nn
import torch.nn.functional as F

# floor added to the predicted uncertainty
EPS = 1e-3
SIGMA_POOLING = ['raw-mean', 'sigma-mean']

class QualityHead(nn.Module):
	""" Three fully connected layers with ReLU between, emitting (score, raw uncertainty) """
	def __init__(self, dim, hidden=(512, 128)):
		super().__init__()
		self.dim = dim
		h1, h2 = hidden
		self.fc1 = nn.Linear(dim, h1)
		self.fc2 = nn.Linear(h1, h2)
		self.fc3 = nn.Linear(h2, 2)

	def forward(self, V):
		if V.shape[-1] != self.dim:
			raise ut.ContractError('fused vector has ' + str(V.shape[-1]) + ' entries, the head expects ' +
				str(self.dim))
		return self.fc3(F.relu(self.fc2(F.relu(self.fc1(V)))))

# inputs: a head and fused vectors (N, dim)
# output: raw scores (N,) and raw uncertainties (N,)
def regress_frame(head, V):
	out = head(V)
	return out[..., 0], out[..., 1]

class QualityPrediction:
	""" Frame scores, video score and uncertainty of one video """
	def __init__(self, per_frame, q_deep, sigma_hat, frame_indices=None):
		self.per_frame = per_frame
		self.q_deep = q_deep
		self.sigma_hat = sigma_hat
		self.frame_indices = frame_indices

	def to_dict(self):
		return {'per_frame': [float(q) for q in self.per_frame], 'q_deep': float(self.q_deep),
			'sigma_hat': float(self.sigma_hat), 'frame_indices': self.frame_indices}

# positive uncertainty from raw values
def positive_sigma(raw):
	return F.softplus(raw) + EPS

# inputs: raw scores and raw uncertainties of the sampled frames (tensors of shape (T,))
# output: video score and uncertainty as tensors, differentiable;
# 'raw-mean' pools the raw uncertainty before softplus, 'sigma-mean' pools per-frame sigmas
def pool_video(scores, raw_sigma, sigma_pooling='raw-mean'):
	if scores.numel() == 0:
		raise ut.ContractError('cannot aggregate a video without frames')
	q = torch.mean(scores)
	if sigma_pooling == 'raw-mean':
		s = positive_sigma(torch.mean(raw_sigma))
	elif sigma_pooling == 'sigma-mean':
		s = torch.mean(positive_sigma(raw_sigma))
	else:
		raise ut.ConfigurationError('unknown uncertainty pooling ' + str(sigma_pooling))
	return q, s

# inputs: list of (raw score, raw uncertainty) per frame
# output: a QualityPrediction
def aggregate_video(per_frame, frame_indices=None, sigma_pooling='raw-mean'):
	if len(per_frame) == 0:
		raise ut.ContractError('cannot aggregate a video without frames')
	t = torch.as_tensor([[float(a), float(b)] for a, b in per_frame], dtype=torch.float64)
	q, s = pool_video(t[:, 0], t[:, 1], sigma_pooling)
	return QualityPrediction(t[:, 0].tolist(), q.item(), s.item(), frame_indices)
