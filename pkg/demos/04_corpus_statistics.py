"""
Do relevant documents get different localization maps?
======================================================

For every (query, document) pair compute the total attribution
``sum(L)`` and the kurtosis of ``L``, then run one-sided Mann-Whitney U
tests of relevant against non-relevant documents.
"""

import gradrank

data, emb = gradrank.generate_synthetic_corpus(120, 160, seed=0)
model = gradrank.train(gradrank.init_model(gradrank.RankerConfig(seed=0)), data.split(100)[0], emb)

result = gradrank.corpus_analysis(model, data, emb)
print("documents analysed:", len(result.rows), " constant maps excluded:", result.excluded_count)
for test in result.tests.values():
    print("%-9s  median relevant %.3f  median other %.3f  U=%.0f  p=%.3g  -> %s larger"
          % (test.measure, test.median_pos, test.median_neg, test.u_statistic, test.p_value, test.direction))

# The same test on any two samples:
res = gradrank.mann_whitney_u([3.1, 4.0, 5.2, 6.3], [1.0, 2.2, 3.0], alternative="greater")
print("\ntoy example: U=%.1f p=%.3f (%s)" % (res.u_statistic, res.p_value, res.direction))

with open("demo_stats.json", "w") as fh:
    fh.write(result.to_json())
print("wrote demo_stats.json")
