# Generally useful functions and the error hierarchy shared by all fdim modules.
import hashlib
import json
import logging
import random
import numpy as np
from scipy.special import ndtr

log = logging.getLogger('fdim.util')

### process exit codes
EXIT_OK = 0
EXIT_INFRA = 1
EXIT_CONFIG = 2
EXIT_DEPENDENCY = 3
EXIT_MALFORMED = 4
EXIT_NUMERIC = 5

class FdimError(Exception):
	""" Base class of all errors raised by fdim; carries a message and a process exit code """
	exit_code = EXIT_INFRA
	def __init__(self, message):
		super().__init__(message)
		self.message = message

class ConfigurationError(FdimError):
	""" Invalid or inconsistent configuration, flags or ablation keys """
	exit_code = EXIT_CONFIG

class ContractError(FdimError):
	""" A function was called with arguments violating its preconditions """
	exit_code = EXIT_CONFIG

class DependencyError(FdimError):
	""" An external tool is missing or failed """
	exit_code = EXIT_DEPENDENCY

class MalformedInputError(FdimError):
	""" An input file does not have the expected layout """
	exit_code = EXIT_MALFORMED

class AlignmentError(FdimError):
	""" Reference and distorted clips cannot be put in correspondence """
	exit_code = EXIT_MALFORMED

class GeometryError(FdimError):
	""" A frame is too small for the network """
	exit_code = EXIT_MALFORMED

class NumericError(FdimError):
	""" A non-finite value appeared where a finite one is required """
	exit_code = EXIT_NUMERIC

class FitError(FdimError):
	""" A curve fit did not converge or the data is degenerate;
	keeps the best parameters found so far and their residual """
	def __init__(self, message, params=None, residual=None):
		super().__init__(message)
		self.params = params
		self.residual = residual

class DegenerateError(FdimError):
	""" Statistics requested on data without variance """

class ProtocolError(FdimError):
	""" No valid groups remain for an evaluation protocol """

class PartialResultError(FdimError):
	""" Only one of the two quality branches produced a score """

# inputs: time in seconds
# output: a string with the time in hours, minutes and seconds
def timef(atime):
	hours, rem = divmod(atime, 3600)
	minutes, seconds = divmod(rem, 60)
	res = "{:0>2}:{:0>2}:{:05.2f}".format(int(hours), int(minutes), seconds)
	return res

# standard normal cumulative distribution function
def Phi(x):
	return ndtr(x)

# inputs: a json-serializable object (dicts, lists, strings, numbers)
# output: sha256 hex digest of its canonical json form
def fingerprint(obj):
	s = json.dumps(obj, sort_keys=True, separators=(',', ':'), default=str)
	return hashlib.sha256(s.encode('utf-8')).hexdigest()

# sha256 of a file's bytes
def file_fingerprint(path, chunk=1 << 20):
	h = hashlib.sha256()
	with open(path, 'rb') as f:
		for block in iter(lambda: f.read(chunk), b''):
			h.update(block)
	return h.hexdigest()

# seed every random number generator a run touches;
# returns the numpy generator through which all run randomness should flow
def seed_everything(seed):
	random.seed(seed)
	np.random.seed(seed % (2**32))
	try:
		import torch
		torch.manual_seed(seed)
	except ImportError:
		pass
	return np.random.default_rng(seed)

# write a json document with sorted keys so that reruns are byte-identical
def dump_json(obj, f):
	json.dump(obj, f, sort_keys=True, indent=2, default=_json_default)
	f.write('\n')

def _json_default(o):
	if isinstance(o, np.generic):
		return o.item()
	if isinstance(o, np.ndarray):
		return o.tolist()
	raise TypeError('not serializable: ' + type(o).__name__)

# install a stderr handler on the package logger;
# verbosity: -1 quiet, 0 normal, 1 or more verbose
def setup_logging(verbosity=0):
	level = logging.INFO
	if verbosity < 0:
		level = logging.WARNING
	elif verbosity > 0:
		level = logging.DEBUG
	logger = logging.getLogger('fdim')
	logger.handlers = []
	handler = logging.StreamHandler()
	handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
	logger.addHandler(handler)
	logger.setLevel(level)
	return logger
