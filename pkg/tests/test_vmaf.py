import os
import shutil
import stat
import numpy as np
import pytest

from fdim.lib import synth
from fdim.lib import util as ut
from fdim.lib import video as vd
from fdim.lib import vmaf

FAKE = '''#!/bin/sh
if [ "$1" = "--version" ]; then echo "fake-vmaf 3.0.0"; exit 0; fi
out=""
args="$*"
while [ $# -gt 0 ]; do
	if [ "$1" = "-o" ]; then out="$2"; fi
	shift
done
echo "$args" > "$(dirname "$0")/last_args"
echo '{"pooled_metrics": {"vmaf": {"mean": 87.5}}}' > "$out"
'''

FAILING = '''#!/bin/sh
echo "bad model" >&2
exit 3
'''

def script(tmp_path, name, text):
	p = tmp_path / name
	p.write_text(text)
	p.chmod(p.stat().st_mode | stat.S_IEXEC)
	return str(p)

def clips(w=32, h=32, n=2):
	ref = synth.make_reference(0, w, h, n, 25, seed=1)
	return ref, ref.with_frames(list(ref.frames))

def test_tool_call(tmp_path):
	tool = vmaf.VmafTool(script(tmp_path, 'vmaf', FAKE), scratch_dir=str(tmp_path))
	ref, dist = clips()
	assert tool.score(ref, dist) == 87.5
	assert tool.calls == 1
	args = (tmp_path / 'last_args').read_text()
	assert '--model version=vmaf_v0.6.1' in args
	assert '-w 32 -h 32 -p 420 -b 8' in args
	assert tool.versions() == {'vmaf_model': 'vmaf_v0.6.1', 'vmaf': 'fake-vmaf 3.0.0'}

def test_tool_from_environment(tmp_path, monkeypatch):
	monkeypatch.setenv(vmaf.ENV_BINARY, script(tmp_path, 'vmaf', FAKE))
	tool = vmaf.VmafTool(scratch_dir=str(tmp_path))
	assert tool.available()
	assert vmaf.score_traditional(*clips(), tool) == 87.5

def test_precomputed_scores_skip_the_tool(tmp_path):
	csv = tmp_path / 'scores.csv'
	csv.write_text('dist_id,vmaf_score\nd1,71.25\nd2,40\n')
	tool = vmaf.VmafTool(str(tmp_path / 'missing'), precomputed=vmaf.load_precomputed(str(csv)))
	ref, dist = clips()
	assert tool.score(ref, dist, 'd1') == 71.25
	assert tool.score(ref, dist, 'd2') == 40.
	assert tool.calls == 0
	assert tool.versions()['vmaf'] == 'precomputed'
	with pytest.raises(ut.DependencyError):
		tool.score(ref, dist, 'd3')

def test_bad_precomputed_file(tmp_path):
	csv = tmp_path / 'scores.csv'
	csv.write_text('id,score\nd1,1\n')
	with pytest.raises(ut.MalformedInputError):
		vmaf.load_precomputed(str(csv))

def test_missing_binary(tmp_path):
	tool = vmaf.VmafTool(str(tmp_path / 'no-such-vmaf'))
	with pytest.raises(ut.DependencyError) as err:
		tool.score(*clips())
	assert err.value.exit_code == 3
	assert vmaf.ENV_BINARY in err.value.message

def test_failing_tool(tmp_path):
	tool = vmaf.VmafTool(script(tmp_path, 'vmaf', FAILING), scratch_dir=str(tmp_path))
	with pytest.raises(ut.DependencyError) as err:
		tool.score(*clips())
	assert 'bad model' in err.value.message

def test_per_frame_fallback(tmp_path):
	p = tmp_path / 'v.json'
	p.write_text('{"frames": [{"metrics": {"vmaf": 80}}, {"metrics": {"vmaf": 90}}]}')
	assert vmaf.parse_vmaf_json(str(p)) == 85.
	p.write_text('{"frames": []}')
	with pytest.raises(ut.MalformedInputError):
		vmaf.parse_vmaf_json(str(p))

@pytest.mark.skipif(shutil.which('vmaf') is None and not os.environ.get(vmaf.ENV_BINARY),
	reason='vmaf tool not installed')
def test_real_tool_orders_blur(tmp_path):
	ref = synth.make_reference(0, 128, 128, 4, 25, seed=0)
	rng = np.random.default_rng(0)
	light = synth.distort(ref, synth.DistortionRecipe('gaussian-blur', 1), rng)
	heavy = synth.distort(ref, synth.DistortionRecipe('gaussian-blur', 5), rng)
	tool = vmaf.VmafTool(scratch_dir=str(tmp_path))
	assert tool.score(ref, heavy) < tool.score(ref, light)
