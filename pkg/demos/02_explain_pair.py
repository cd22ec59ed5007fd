"""
Explaining one query-document score
===================================

Grad-CAM turns the gradient of the ranking score into a localization map
``L`` over (query term, document term) pairs. Its column sums ``l`` give
each document term's contribution; the column sums ``m`` of the
interaction matrix give its raw similarity to the query. Comparing the
two separates *effective* terms from *filtered* ones.
"""

from pathlib import Path

import numpy as np

import gradrank
from gradrank.report import write_ppm

data, emb = gradrank.generate_synthetic_corpus(120, 160, seed=0)
model = gradrank.train(gradrank.init_model(gradrank.RankerConfig(seed=0)), data.split(100)[0], emb)

# First held-out relevant document with at least one filtered term.
for rec in data.records[100:]:
    report = gradrank.explain(model, rec.query, rec.positive, emb, top_k=5)
    if report.filtered:
        break

print("query:", " ".join(report.query))
print("score: %.3f" % report.score)
print("L is %dx%d, sum %.3f, kurtosis %s" % (*report.L.shape, report.total,
                                             "n/a" if report.kurtosis is None else "%.2f" % report.kurtosis))

# Which query/document term pair contributes most?
i, j = np.unravel_index(report.L.argmax(), report.L.shape)
print("strongest pair: (%s, %s)" % (report.query[i], report.doc[j]))

print("\neffective terms (high l):")
for t in report.effective:
    print("  %-6s pos %2d  l=%.3f  m=%.3f" % (t.token, t.position, t.l, t.m))
print("filtered terms (high m, low l):")
for t in report.filtered:
    print("  %-6s pos %2d  l=%.3f  m=%.3f" % (t.token, t.position, t.l, t.m))

# Heatmaps: blue = low, red = high (min-max scaled per map).
out = Path("demo_explain")
out.mkdir(exist_ok=True)
write_ppm(report.L, out / "L.ppm", cell_px=12)
write_ppm(report.M, out / "M.ppm", cell_px=12)
(out / "report.json").write_text(report.to_json())
print("\nwrote", out / "L.ppm", out / "M.ppm", out / "report.json")
