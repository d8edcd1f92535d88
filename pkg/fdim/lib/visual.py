## Export of the multi-scale feature maps of one frame pair as images:
# each map is averaged over channels, min-max normalized, upsampled to the frame size and written
# as a grayscale image and as a color overlay on the reference frame.

import logging
import os
import numpy as np
import torch
import torch.nn.functional as F
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt

log = logging.getLogger('fdim.visual')

# overlay opacity of the map
ALPHA = 0.5

# inputs: a feature map (C, h, w) and the frame size
# output: the channel mean, min-max normalized at feature resolution and resized to (H, W);
# 	all zeros for a constant map
def map_image(fmap, height, width):
	m = fmap.mean(dim=0).detach().cpu().double()
	lo, hi = m.min(), m.max()
	if hi - lo <= 0:
		return np.zeros((height, width))
	m = ((m - lo) / (hi - lo))[None, None]
	m = F.interpolate(m, size=(height, width), mode='bilinear', align_corners=False)[0, 0]
	return m.clamp(0, 1).numpy()

def _write(img, rgb, path_gray, path_overlay, cmap):
	plt.imsave(path_gray, img, cmap='gray', vmin=0, vmax=1)
	color = plt.get_cmap(cmap)(img)[..., :3]
	plt.imsave(path_overlay, np.clip((1 - ALPHA) * rgb + ALPHA * color, 0, 1))

# inputs: model, reference and distorted frames (3, H, W) in [0, 1], output directory
# output: dictionary from map name to the written file paths, and the normalized maps
def export_feature_maps(model, ref_frame, dist_frame, out_dir, prefix='frame', cmap='jet'):
	os.makedirs(out_dir, exist_ok=True)
	_, h, w = ref_frame.shape
	dtype = next(model.parameters()).dtype
	r = torch.as_tensor(np.ascontiguousarray(ref_frame))[None].to(dtype)
	d = torch.as_tensor(np.ascontiguousarray(dist_frame))[None].to(dtype)
	model.eval()
	with torch.no_grad():
		_, _, maps = model(r, d, return_maps=True)
	rgb = np.transpose(np.asarray(ref_frame, dtype=np.float64), (1, 2, 0))
	written = {}
	images = {}
	for name, series in [('refined', maps['H_tilde']), ('discrepancy', maps['E'])]:
		for s, fmap in enumerate(series, 1):
			if fmap is None:
				continue
			key = '%s_s%d' % (name, s)
			img = map_image(fmap[0], h, w)
			gray = os.path.join(out_dir, '%s_%s.png' % (prefix, key))
			overlay = os.path.join(out_dir, '%s_%s_overlay.png' % (prefix, key))
			_write(img, rgb, gray, overlay, cmap)
			written[key] = [gray, overlay]
			images[key] = img
	log.info('wrote %d feature map images to %s', 2 * len(written), out_dir)
	return written, images
