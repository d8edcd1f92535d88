## The hand-crafted quality branch: stock VMAF scores from the external `vmaf` command line tool,
# or from a CSV of precomputed (dist_id, vmaf_score) rows, in which case the tool is never run.

from fdim.lib import util as ut
from fdim.lib import video as vd
import json
import logging
import os
import shutil
import subprocess
import tempfile
import threading
import numpy as np
import pandas as pd

log = logging.getLogger('fdim.vmaf')

ENV_BINARY = 'FDIM_VMAF_BIN'
MODEL_VERSION = 'vmaf_v0.6.1'
HINT = ('install the vmaf tool from libvmaf, point ' + ENV_BINARY +
	' at its binary, or supply precomputed scores with --vmaf-scores')

# one lock per scratch directory: runs sharing a directory are serialized
_locks = {}
_locks_guard = threading.Lock()

def _lock_for(path):
	with _locks_guard:
		return _locks.setdefault(os.path.abspath(path), threading.Lock())

# inputs: path of a CSV with dist_id and vmaf_score columns
# output: a dict from distorted id to score
def load_precomputed(path):
	df = pd.read_csv(path, dtype={'dist_id': str})
	if 'dist_id' not in df.columns or 'vmaf_score' not in df.columns:
		raise ut.MalformedInputError(path + ': expected columns dist_id and vmaf_score')
	return dict(zip(df['dist_id'], df['vmaf_score'].astype(float)))

# inputs: the json log written by the tool
# output: the pooled mean score, or the mean of the per-frame scores if no pooled value is present
def parse_vmaf_json(path):
	with open(path) as f:
		d = json.load(f)
	try:
		return float(d['pooled_metrics']['vmaf']['mean'])
	except KeyError:
		pass
	frames = [fr['metrics']['vmaf'] for fr in d.get('frames', []) if 'vmaf' in fr.get('metrics', {})]
	if not frames:
		raise ut.MalformedInputError(path + ': no vmaf scores in the tool output')
	return float(np.mean(frames))

class VmafTool:
	""" Adapter to the VMAF tool; counts its invocations and records its version """
	def __init__(self, binary=None, model=MODEL_VERSION, scratch_dir=None, precomputed=None):
		self.binary = binary or os.environ.get(ENV_BINARY) or 'vmaf'
		self.model = model
		self.scratch_dir = scratch_dir
		self.precomputed = dict(precomputed or {})
		self.calls = 0
		self._version = None

	def available(self):
		return shutil.which(self.binary) is not None or os.path.isfile(self.binary)

	@property
	def version(self):
		if self._version is None:
			if not self.available():
				raise ut.DependencyError('VMAF tool ' + repr(self.binary) + ' not found; ' + HINT)
			out = subprocess.run([self.binary, '--version'], stdout=subprocess.PIPE,
				stderr=subprocess.STDOUT, text=True)
			self._version = out.stdout.strip() or 'unknown'
		return self._version

	def versions(self):
		v = {'vmaf_model': self.model}
		if self.calls:
			v['vmaf'] = self.version
		else:
			v['vmaf'] = 'precomputed'
		return v

	# inputs: reference and distorted clips and the id of the distorted video
	# output: the VMAF score of the pair, on [0, 100]
	def score(self, ref, dist, dist_id=None):
		if dist_id is not None and dist_id in self.precomputed:
			return self.precomputed[dist_id]
		if not self.available():
			raise ut.DependencyError('no precomputed VMAF score for ' + str(dist_id) +
				' and tool ' + repr(self.binary) + ' not found; ' + HINT)
		dist = vd.resample_to_reference(dist, ref)
		scratch = self.scratch_dir or tempfile.gettempdir()
		with _lock_for(scratch), tempfile.TemporaryDirectory(dir=scratch) as tmp:
			rp = os.path.join(tmp, 'ref.yuv')
			dp = os.path.join(tmp, 'dist.yuv')
			out = os.path.join(tmp, 'vmaf.json')
			vd.write_raw_video(ref, rp)
			vd.write_raw_video(dist, dp)
			cmd = [self.binary, '-r', rp, '-d', dp, '-w', str(ref.width), '-h', str(ref.height),
				'-p', '420', '-b', str(ref.bit_depth), '--model', 'version=' + self.model,
				'--json', '-o', out, '-q']
			log.debug('running %s', ' '.join(cmd))
			self.calls += 1
			res = subprocess.run(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
			if res.returncode != 0:
				raise ut.DependencyError('VMAF tool failed with status ' + str(res.returncode) + ': ' +
					res.stderr.strip()[-500:])
			return parse_vmaf_json(out)

# inputs: reference and distorted clips and a VmafTool
# output: the traditional-branch score
def score_traditional(ref, dist, tool, dist_id=None):
	return tool.score(ref, dist, dist_id)
