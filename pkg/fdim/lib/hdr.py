## This module converts display-encoded signals to absolute linear light with a display model
# and applies the PU21 perceptually uniform encoding, so that SDR-trained networks can be run on HDR.
# Luminance is in cd/m^2 and illuminance in lux throughout.

from fdim.lib import util as ut
import logging
import math
import numpy as np

log = logging.getLogger('fdim.hdr')

EOTFS = ['srgb', 'pq', 'hlg']

## PQ constants
m1 = 2610. / 16384
m2 = 2523. / 4096 * 128
c1 = 3424. / 4096
c2 = 2413. / 4096 * 32
c3 = 2392. / 4096 * 32
PQ_MAX = 10000.

## HLG constants
hlg_a = 0.17883277
hlg_b = 0.28466892
hlg_c = 0.55991073

class DisplayModel:
	""" Physical model of the display the content is viewed on: peak and black luminance,
	screen reflectivity, ambient illuminance and the transfer function of the signal """
	def __init__(self, L_peak, L_black=0.005, k_refl=0.005, E_amb=10., eotf='pq'):
		if eotf not in EOTFS:
			raise ut.ConfigurationError('unknown EOTF ' + str(eotf) + '; expected one of ' + ', '.join(EOTFS))
		if not (L_peak > L_black >= 0):
			raise ut.ConfigurationError('display model needs L_peak > L_black >= 0, got ' +
				str(L_peak) + ' and ' + str(L_black))
		if k_refl < 0 or E_amb < 0:
			raise ut.ConfigurationError('reflectivity and ambient illuminance must be non-negative')
		self.L_peak = float(L_peak)
		self.L_black = float(L_black)
		self.k_refl = float(k_refl)
		self.E_amb = float(E_amb)
		self.eotf = eotf

	@property
	def L_refl(self):
		return ambient_luminance(self.k_refl, self.E_amb)

	def to_dict(self):
		return {'L_peak': self.L_peak, 'L_black': self.L_black, 'k_refl': self.k_refl,
			'E_amb': self.E_amb, 'eotf': self.eotf}

class PU21Codec:
	""" PU21 encoding of absolute luminance with the coefficients of one of its variants """
	variants = {
		'banding_glare': [0.353487901, 0.3734658629, 8.277049286e-05, 0.9062562627,
			0.09150303166, 0.9099517204, 596.3148142]
	}
	L_min = 0.005
	L_max = 10000.

	def __init__(self, variant='banding_glare'):
		if variant not in self.variants:
			raise ut.ConfigurationError('unknown PU21 variant ' + variant)
		self.variant = variant
		self.p = self.variants[variant]

	# inputs: luminance in cd/m^2, scalar or array
	# output: PU21 values, zero at L_min and about 256 at 100 cd/m^2
	def encode(self, Y):
		Y = np.asarray(Y, dtype=np.float64)
		if not np.all(np.isfinite(Y)):
			raise ut.NumericError('non-finite luminance passed to PU21')
		p1, p2, p3, p4, p5, p6, p7 = self.p
		Yp = np.clip(Y, self.L_min, self.L_max)**p4
		V = p7 * (((p1 + p2 * Yp) / (1 + p3 * Yp))**p5 - p6)
		return np.maximum(V, 0)

pu21 = PU21Codec()

# reflected ambient luminance from screen reflectivity and ambient illuminance
def ambient_luminance(k_refl, E_amb):
	if k_refl < 0 or E_amb < 0:
		raise ut.ContractError('reflectivity and illuminance must be non-negative, got ' +
			str(k_refl) + ' and ' + str(E_amb))
	return k_refl * E_amb / math.pi

## transfer functions from encoded values in [0, 1]
# PQ, absolute luminance in cd/m^2
def eotf_pq(V):
	Vp = np.power(V, 1. / m2)
	return PQ_MAX * np.power(np.maximum(Vp - c1, 0) / (c2 - c3 * Vp), 1. / m1)

# PQ inverse, used to produce test signals
def inverse_eotf_pq(L):
	Y = np.power(np.asarray(L, dtype=np.float64) / PQ_MAX, m1)
	return np.power((c1 + c2 * Y) / (1 + c3 * Y), m2)

# sRGB, relative luminance in [0, 1]
def eotf_srgb(V):
	V = np.asarray(V, dtype=np.float64)
	return np.where(V <= 0.04045, V / 12.92, np.power((np.maximum(V, 0.04045) + 0.055) / 1.055, 2.4))

# HLG: inverse OETF followed by the system gamma for the given peak, relative in [0, 1]
def eotf_hlg(V, L_peak=1000.):
	V = np.asarray(V, dtype=np.float64)
	low = V**2 / 3
	high = (np.exp((np.maximum(V, 0.5) - hlg_c) / hlg_a) + hlg_b) / 12
	scene = np.where(V <= 0.5, low, high)
	gamma = 1.2 + 0.42 * math.log10(L_peak / 1000.)
	return np.power(scene, gamma)

# inputs: encoded values I_de in [0, 1] (any shape) and a display model
# output: absolute linear light in cd/m^2, including the reflected ambient component
def display_to_linear(I_de, model):
	I = np.asarray(I_de, dtype=np.float64)
	if np.any(I < 0) or np.any(I > 1):
		log.warning('clamping %d encoded values outside [0, 1]', int(np.sum((I < 0) | (I > 1))))
		I = np.clip(I, 0, 1)
	if model.eotf == 'pq':
		L = np.minimum(eotf_pq(I), model.L_peak)
	else:
		E = eotf_srgb(I) if model.eotf == 'srgb' else eotf_hlg(I, model.L_peak)
		L = np.minimum((model.L_peak - model.L_black) * E + model.L_black, model.L_peak)
	return L + model.L_refl

# PU21 encoding with the module's default codec
def pu21_encode(I_lin, codec=pu21):
	return codec.encode(I_lin)

# inputs: an encoded RGB frame with values in [0, 1] and a display model
# output: the PU21-encoded frame divided by the largest attainable PU21 value, within [0, 1]
def hdr_preprocess(frame, model, codec=pu21):
	I_lin = display_to_linear(frame, model)
	top = codec.encode(model.L_peak + model.L_refl)
	return codec.encode(I_lin) / top
