## Command-line flag groups shared by the fdim commands, and the RunConfig that validates
# them before any heavy work starts.

from fdim.lib import util as ut
from fdim.lib import config as cf
from fdim.lib import hdr
from fdim.lib import video as vd
import os

class RunConfig:
	""" The parsed flags of one command; `require` and `check_exists` raise ConfigurationError
	so that problems surface before clips are decoded or models built """
	def __init__(self, command, args):
		self.command = command
		self.values = dict(vars(args))

	def __getattr__(self, name):
		try:
			return self.__dict__['values'][name]
		except KeyError:
			raise AttributeError(name)

	def require(self, *names):
		missing = ['--' + n.replace('_', '-') for n in names if self.values.get(n) is None]
		if missing:
			raise ut.ConfigurationError(self.command + ': missing required flag(s) ' + ', '.join(missing))

	def check_exists(self, *names):
		for n in names:
			p = self.values.get(n)
			if p is not None and not os.path.exists(p):
				raise ut.ConfigurationError(self.command + ': --' + n.replace('_', '-') + ' ' + p + ' does not exist')

	# the ablation and config assignments given with --set / --ablation
	def assignments(self):
		a = cf.parse_assignments(self.values.get('set'))
		ab = cf.parse_assignments(self.values.get('ablation'))
		bad = [k for k in ab if k not in cf.ABLATION_KEYS]
		if bad:
			raise ut.ConfigurationError('unknown ablation key(s) ' + ', '.join(bad) + '; expected ' +
				', '.join(cf.ABLATION_KEYS))
		a.update(ab)
		return a

	# the display model selected with --hdr, or None
	def display_model(self):
		if not self.values.get('hdr'):
			return None
		peak = self.values.get('display_peak')
		if peak is None:
			peak = 100. if self.values.get('eotf') == 'srgb' else 1000.
		return hdr.DisplayModel(peak, self.display_black, self.refl, self.ambient_lux, self.eotf)

	def sample_spec(self):
		return vd.FrameSampleSpec(self.values.get('frames', 'one-per-second'), self.values.get('seed', 0))

def add_common(parser):
	parser.add_argument('--seed', type=int, default=0, help='seed of every random choice of the run')
	parser.add_argument('-v', '--verbose', action='count', default=0, help='more log output on stderr')
	parser.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')

def add_geometry(parser, required=True):
	parser.add_argument('--width', type=int, required=required, help='frame width in pixels')
	parser.add_argument('--height', type=int, required=required, help='frame height in pixels')
	parser.add_argument('--fps', type=float, default=25., help='frame rate, default 25')
	parser.add_argument('--pix-fmt', default='yuv420p', choices=sorted(vd.PIX_FMTS),
		help='raw pixel format, default yuv420p')
	parser.add_argument('--dist-width', type=int, help='distorted frame width if it differs')
	parser.add_argument('--dist-height', type=int, help='distorted frame height if it differs')
	parser.add_argument('--signal-format', default='sdr-srgb', choices=vd.SIGNAL_FORMATS)

def add_display(parser):
	parser.add_argument('--hdr', action='store_true', help='convert frames through the display model and PU21')
	parser.add_argument('--eotf', default='pq', choices=hdr.EOTFS, help='transfer function of the signal')
	parser.add_argument('--display-peak', type=float, help='display peak luminance in cd/m^2 ' +
		'(default 1000, or 100 for srgb)')
	parser.add_argument('--display-black', type=float, default=0.005, help='display black level in cd/m^2')
	parser.add_argument('--refl', type=float, default=0.005, help='screen reflectivity')
	parser.add_argument('--ambient-lux', type=float, default=10., help='ambient illuminance in lux')

def add_frames(parser):
	parser.add_argument('--frames', default='one-per-second',
		help='frame sampling: one-per-second, all or stride-k')

def add_scoring(parser):
	parser.add_argument('--weights', help='checkpoint file')
	parser.add_argument('--calibration', help='calibration file; defaults to the one in the checkpoint')
	parser.add_argument('--vmaf-scores', help='CSV of precomputed dist_id,vmaf_score; the VMAF tool is not run')
	parser.add_argument('--vmaf-bin', help='VMAF tool binary (default $FDIM_VMAF_BIN or vmaf)')

def add_model(parser):
	parser.add_argument('--set', action='append', metavar='KEY=VALUE',
		help='configuration override, repeatable')
	parser.add_argument('--ablation', action='append', metavar='KEY=VALUE',
		help='ablation toggle (' + ', '.join(cf.ABLATION_KEYS) + '), repeatable')
