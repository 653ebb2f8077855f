"""Small instance builders shared across test modules."""

import numpy as np
from hypothesis import strategies as st

from gnalign.graph_io import Network
from gnalign.instance import AlignmentInstance, complete_instance


def gnp(rng, n, p, prefix="v"):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return Network(tuple(f"{prefix}{t}" for t in range(n)), tuple(zip(iu[keep].tolist(), ju[keep].tolist())))


def clique(k, prefix="c"):
    return Network(tuple(f"{prefix}{t}" for t in range(k)), tuple((a, b) for a in range(k) for b in range(a + 1, k)))


def random_instance(seed, n1=5, n2=5, p=0.5, cand_p=1.0, node_scores=False, edge_weight=1.0):
    """Random pair of G(n, p) graphs; each pair is a candidate with probability ``cand_p``."""
    rng = np.random.default_rng(seed)
    g1, g2 = gnp(rng, n1, p, "x"), gnp(rng, n2, p, "y")
    if cand_p >= 1.0 and not node_scores:
        return complete_instance(g1, g2, edge_weight=edge_weight)
    pi, pk = np.divmod(np.arange(n1 * n2), n2)
    keep = rng.random(pi.size) < cand_p
    c = rng.integers(0, 4, size=pi.size).astype(float) if node_scores else np.zeros(pi.size)
    return AlignmentInstance(g1, g2, pi[keep], pk[keep], c[keep], edge_weight)


@st.composite
def instances(draw, max_n=5):
    seed = draw(st.integers(0, 2**32 - 1))
    n1 = draw(st.integers(1, max_n))
    n2 = draw(st.integers(1, max_n))
    p = draw(st.floats(0.2, 0.9))
    cand_p = draw(st.sampled_from([1.0, 0.7, 0.4]))
    scores = draw(st.booleans())
    weight = draw(st.sampled_from([1.0, 2.0, 0.5]))
    return random_instance(seed, n1, n2, p, cand_p, scores, weight)
