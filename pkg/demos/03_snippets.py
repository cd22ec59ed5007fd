"""
Query-biased snippets
=====================

The vanilla generator picks the window with the most exact query-term
matches. The Grad-CAM generator adds ``l_j / w`` to each term's match
indicator, so among windows with equal match counts the one the model
relied on most wins, and strong attribution can outweigh a lone match.
"""

import gradrank
from gradrank.gradcam import compute_localization

data, emb = gradrank.generate_synthetic_corpus(120, 160, seed=0)
model = gradrank.train(gradrank.init_model(gradrank.RankerConfig(seed=0)), data.split(100)[0], emb)

w = 8  # synthetic documents are 20-40 tokens; the usual window is 20
same = 0
examples = []
for rec in data:
    M = gradrank.build_interaction_matrix(rec.query, rec.positive, emb)
    _, _, loc = compute_localization(model, M)
    van = gradrank.vanilla_snippet(rec.query, rec.positive, w)
    gc = gradrank.gradcam_snippet(rec.query, rec.positive, loc.l, w)
    if (van.start, van.end) == (gc.start, gc.end):
        same += 1
    elif len(examples) < 3:
        examples.append((rec, van, gc))

print("identical snippets for %d of %d relevant documents" % (same, len(data)))
for rec, van, gc in examples:
    print("\nquery:   ", rec.query.text())
    print("vanilla [%2d,%2d) score %.3f: %s" % (van.start, van.end, van.score, van.text()))
    print("gradcam [%2d,%2d) score %.3f: %s" % (gc.start, gc.end, gc.score, gc.text()))
