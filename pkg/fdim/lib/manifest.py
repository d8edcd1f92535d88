## Training and evaluation manifests: one CSV row per distorted video with the location and
# geometry of the reference and distorted files and the subjective rating.
# Relative paths are resolved against the manifest's directory.

from fdim.lib import util as ut
from fdim.lib import video as vd
from fdim.lib.ranking import SubjectiveRecord
import logging
import os
import pandas as pd

log = logging.getLogger('fdim.manifest')

COLUMNS = ['ref_path', 'dist_path', 'width', 'height', 'fps', 'pix_fmt', 'mos', 'mos_std',
	'codec', 'codec_group']
# optional columns and their defaults; empty ids are derived from file names
OPTIONAL = {'ref_id': '', 'dist_id': '', 'dataset': '', 'subset': '', 'signal_format': 'sdr-srgb',
	'dist_width': 0, 'dist_height': 0}

# inputs: manifest path
# output: a DataFrame with every required and optional column
def read_manifest(path):
	try:
		df = pd.read_csv(path, dtype={'ref_id': str, 'dist_id': str, 'codec': str})
	except pd.errors.EmptyDataError:
		raise ut.ConfigurationError(path + ': empty manifest')
	except (pd.errors.ParserError, UnicodeDecodeError) as err:
		raise ut.MalformedInputError(path + ': unreadable manifest (' + str(err) + ')')
	missing = [c for c in COLUMNS if c not in df.columns]
	if missing:
		raise ut.MalformedInputError(path + ': manifest lacks column(s) ' + ', '.join(missing))
	if len(df) == 0:
		raise ut.ConfigurationError(path + ': manifest has no rows')
	for c, default in OPTIONAL.items():
		if c not in df.columns:
			df[c] = default
		df[c] = df[c].fillna(default)
	base = os.path.dirname(os.path.abspath(path))
	for c in ['ref_path', 'dist_path']:
		df[c] = [p if os.path.isabs(p) else os.path.join(base, p) for p in df[c]]
	df['ref_id'] = [r if r else _stem(p) for r, p in zip(df['ref_id'], df['ref_path'])]
	df['dist_id'] = [d if d else _stem(p) for d, p in zip(df['dist_id'], df['dist_path'])]
	unknown = sorted(set(df['pix_fmt']) - set(vd.PIX_FMTS))
	if unknown:
		raise ut.ConfigurationError(path + ': unsupported pixel format(s) ' + ', '.join(map(str, unknown)))
	return df

def _stem(p):
	return os.path.splitext(os.path.basename(p))[0]

def write_manifest(df, path):
	df.to_csv(path, index=False, float_format='%.6g')

# inputs: a manifest DataFrame
# output: one SubjectiveRecord per row, pointing back at its row
def records_from_manifest(df):
	return [SubjectiveRecord(row.ref_id, row.dist_id, row.mos, row.mos_std, row.codec,
		row.codec_group, index=i) for i, row in zip(df.index, df.itertuples())]

# rows whose reference or distorted file does not exist
def missing_files(df):
	out = []
	for i, row in zip(df.index, df.itertuples()):
		gone = [p for p in [row.ref_path, row.dist_path] if not os.path.exists(p)]
		if gone:
			out.append((i, gone))
	return out

# inputs: a manifest row
# output: reference and distorted clips of the row
def load_pair(row):
	bd = vd.PIX_FMTS[row.pix_fmt]
	ref = vd.read_raw_video(row.ref_path, int(row.width), int(row.height), bd, float(row.fps),
		row.signal_format)
	dw = int(row.dist_width) or int(row.width)
	dh = int(row.dist_height) or int(row.height)
	dist = vd.read_raw_video(row.dist_path, dw, dh, bd, float(row.fps), row.signal_format)
	return ref, dist
