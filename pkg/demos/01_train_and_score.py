"""
Training a ranker on a synthetic corpus
=======================================

Generate a small corpus whose relevant documents share tokens (and
near-synonyms) with their query, train the convolutional ranker with a
pairwise hinge loss and check how often it ranks the relevant document
first on held-out queries.
"""

import gradrank
from gradrank.ranker import pairwise_accuracy

# 120 queries, each with one relevant and four non-relevant documents.
data, emb = gradrank.generate_synthetic_corpus(120, 160, seed=0)
train_set, held_out = data.split(100)
rec = held_out.records[0]
print("query:", rec.query.text())
print("relevant doc:", rec.positive.text()[:80], "...")

# Default architecture: two 3x3 conv layers (8 and 16 maps), adaptive
# max-pool to 4x8, one hidden layer of 32 units.
model = gradrank.init_model(gradrank.RankerConfig(seed=0))
print("parameters:", model.n_parameters())
print("held-out accuracy before training: %.3f" % pairwise_accuracy(model, held_out, emb))

gradrank.train(model, train_set, emb, epochs=10, lr=0.05, margin=1.0,
               callback=lambda epoch, loss: print("  epoch %d  mean hinge loss %.4f" % (epoch, loss)))
print("held-out accuracy after training: %.3f" % pairwise_accuracy(model, held_out, emb))

# Scores for one held-out query.
print("score(relevant)   = %.3f" % model.score_pair(rec.query, rec.positive, emb))
for neg in rec.negatives:
    print("score(irrelevant) = %.3f" % model.score_pair(rec.query, neg, emb))

gradrank.save_model(model, "demo_model.grnk")
print("saved demo_model.grnk")
