# Figures from evaluation reports and sweeps
# Requires: report.json and report.csv written by `fdim evaluate`, or sweep.csv from fdim.opt.sweep
# Output: scatter of mapped predictions against MOS, radar of SROCC per subset, sweep curves

import json
import os
import sys
import numpy as np
import pandas as pd
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt

plt.rcParams.update({'font.size': 14})

# scatter of mapped prediction versus MOS, colored by codec group
def scatter(csv, path):
	df = pd.read_csv(csv)
	fig, ax = plt.subplots(figsize=(6, 5))
	x = 'mapped' if 'mapped' in df.columns else 'pred'
	groups = df.groupby('codec_group') if 'codec_group' in df.columns else [('all', df)]
	for (name, g), c in zip(groups, ['tab:blue', 'tab:orange', 'tab:green', 'tab:red']):
		ax.scatter(g[x], g['mos'], s=18, c=c, label=str(name), alpha=0.8)
	lo = min(df[x].min(), df['mos'].min())
	hi = max(df[x].max(), df['mos'].max())
	ax.plot([lo, hi], [lo, hi], 'k--', lw=1)
	ax.set_xlabel('mapped prediction')
	ax.set_ylabel('MOS')
	ax.legend(frameon=False)
	fig.tight_layout()
	fig.savefig(path, dpi=200)
	plt.close(fig)

# radar of one protocol's SROCC over the subsets of a report
def radar(report_json, path, protocol='per-sequence'):
	with open(report_json) as f:
		doc = json.load(f)
	subsets = doc['protocols'][protocol].get('subsets', {})
	if len(subsets) < 3:
		print('radar needs at least 3 subsets, found ' + str(len(subsets)), file=sys.stderr)
		return
	names = sorted(subsets)
	vals = [subsets[n]['srocc'] for n in names]
	ang = np.linspace(0, 2 * np.pi, len(names), endpoint=False)
	fig = plt.figure(figsize=(6, 6))
	ax = fig.add_subplot(111, polar=True)
	ax.plot(np.append(ang, ang[0]), vals + vals[:1], 'o-')
	ax.fill(np.append(ang, ang[0]), vals + vals[:1], alpha=0.2)
	ax.set_xticks(ang)
	ax.set_xticklabels(names)
	ax.set_ylim(0, 1)
	fig.tight_layout()
	fig.savefig(path, dpi=200)
	plt.close(fig)

# held-out SROCC against the training-data fraction, one curve per codec mix;
# bars per variant for an ablation sweep
def sweep(csv, path):
	df = pd.read_csv(csv)
	fig, ax = plt.subplots(figsize=(6, 4))
	if 'variant' in df.columns:
		ax.barh(df['variant'], df['srocc_per_sequence'])
		ax.set_xlabel('per-sequence SROCC')
		fig.tight_layout()
		fig.savefig(path, dpi=200)
		plt.close(fig)
		return
	for mix, g in df.groupby('codec_mix'):
		g = g.sort_values('data_fraction')
		ax.plot(100 * g['data_fraction'], g['srocc_per_sequence'], 'o-', label=mix)
	ax.set_xscale('log')
	ax.set_xlabel('training data (%)')
	ax.set_ylabel('per-sequence SROCC')
	ax.legend(frameon=False)
	fig.tight_layout()
	fig.savefig(path, dpi=200)
	plt.close(fig)

if __name__ == "__main__":
	if len(sys.argv) < 2:
		print('usage: plot_report.py <evaluation directory | sweep.csv>', file=sys.stderr)
		sys.exit(2)
	target = sys.argv[1]
	if target.endswith('.csv'):
		sweep(target, os.path.splitext(target)[0] + '.pdf')
	else:
		scatter(os.path.join(target, 'report.csv'), os.path.join(target, 'scatter.pdf'))
		radar(os.path.join(target, 'report.json'), os.path.join(target, 'radar.pdf'))
