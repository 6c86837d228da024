"""The two building blocks of the hierarchical model: GRU cells and
attention, shown in isolation.

The update gate z blends the previous state with a candidate state:
forcing z to 0 freezes the state, forcing z to 1 replaces it. Attention
turns arbitrary scores into a convex combination, so a dominant score
selects its vector exactly.
"""

import numpy as np

from controkit import autodiff as ad
from controkit.embeddings import EmbeddingTable
from controkit.gru import BoundGru, GruParams, gru_step
from controkit.models.han import HanParams, han_forward
from controkit.textprep import Vocabulary

rng = np.random.default_rng(7)

# --- one GRU step ------------------------------------------------------------
params = GruParams.random(input_dim=3, hidden_dim=4, rng=rng, scale=0.4)
graph = ad.Graph(np.float64)
cell = BoundGru(graph, "demo", params)
x = graph.constant(rng.normal(size=3))
h0 = graph.constant(rng.normal(size=4))
h1 = gru_step(x, h0, cell)
print("h0   :", np.round(h0.data, 3))
print("h1   :", np.round(h1.data, 3))

# force the update gate shut: the state passes through untouched
params.b_z[:] = -np.inf
graph = ad.Graph(np.float64)
frozen = gru_step(graph.constant(rng.normal(size=3)),
                  graph.constant(h0.data), BoundGru(graph, "frozen", params))
print("z=0 keeps h exactly:", np.array_equal(frozen.data, h0.data))

# --- attention on a toy document ---------------------------------------------
vocab = Vocabulary.from_tokens(
    ["the", "debate", "was", "calm", "then", "riots", "erupted", "downtown"], {})
emb = EmbeddingTable.random(vocab, dim=8, rng=rng)
# larger-than-default init so the untrained attention is visibly non-uniform
han = HanParams.random(emb, rng, hidden_dim=4, scale=0.9)

sentences = [
    [vocab.index(w) for w in "the debate was calm".split()],
    [vocab.index(w) for w in "then riots erupted downtown".split()],
]
probs, word_attention, sentence_attention = han_forward(sentences, han)

print("\nclass probabilities:", np.round(probs, 3))
for sent, weights in zip(["the debate was calm", "then riots erupted downtown"],
                         word_attention):
    pairs = ", ".join(f"{w}:{a:.2f}" for w, a in zip(sent.split(), weights))
    print(f"word attention  [{pairs}]  (sums to {weights.sum():.6f})")
print("sentence attention:", np.round(sentence_attention, 3),
      f"(sums to {sentence_attention.sum():.6f})")
print("single-word sentence gets weight exactly 1:",
      han_forward([[2]], han)[1][0].tolist() == [1.0])
