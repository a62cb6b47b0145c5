import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from gmf_gcnn.graph_core import build_graph

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Independent copy of the reference graph: edges read off the printed
# normalized weight matrix, not imported from the package.
REF_EDGES = [(1, 2), (1, 3), (1, 8), (2, 3), (2, 4), (2, 5), (2, 8),
             (3, 4), (4, 5), (4, 6), (5, 6), (5, 7), (5, 8), (6, 7)]


def ref_weights() -> np.ndarray:
    w = np.zeros((8, 8))
    for a, b in REF_EDGES:
        w[a - 1, b - 1] = w[b - 1, a - 1] = 1.0
    return w


def ref_wn() -> np.ndarray:
    w = ref_weights()
    d = w.sum(axis=1)
    out = np.zeros_like(w)
    for i in range(8):
        for j in range(8):
            if w[i, j]:
                out[i, j] = 1.0 / np.sqrt(d[i] * d[j])
    return out


def random_connected_weights(rng: np.random.Generator, n: int, p: float = 0.4, weighted: bool = True) -> np.ndarray:
    """Random graph with a spanning path so no vertex is isolated."""
    w = np.zeros((n, n))
    perm = rng.permutation(n)
    for a, b in zip(perm[:-1], perm[1:]):
        w[a, b] = w[b, a] = 1.0
    mask = np.triu(rng.random((n, n)) < p, 1)
    w = np.maximum(w, mask.astype(float))
    w = np.triu(w, 1)
    if weighted:
        w = w * rng.uniform(0.2, 2.0, size=w.shape)
    return w + w.T


@st.composite
def graphs(draw, min_n=3, max_n=16, weighted=True):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return build_graph(random_connected_weights(rng, n, p=draw(st.floats(0.0, 0.8)), weighted=weighted))


seeds = st.integers(0, 2**32 - 1)


def central_difference(fn, vec: np.ndarray, h: float = 1e-6) -> np.ndarray:
    grad = np.empty_like(vec)
    for i in range(vec.size):
        up, dn = vec.copy(), vec.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (fn(up) - fn(dn)) / (2 * h)
    return grad


def oracle_first_iteration(x, w, b, v, t, alpha, beta, gamma, fc_first):
    """Spreadsheet-style recomputation with explicit loops over the printed
    normalized weight matrix."""
    wn = ref_wn()
    n, k = len(x), w.shape[0]
    sx = [sum(wn[i, j] * x[j] for j in range(n)) for i in range(n)]
    y = np.array([[w[c, 0] * x[i] + w[c, 1] * sx[i] for i in range(n)] for c in range(k)])
    on = (y + b[:, None]) > 0
    of = np.array([(y[c, i] + b[c]) if on[c, i] else 0.0 for c in range(k) for i in range(n)])
    z = np.array([sum(v[p, m] * of[m] for m in range(k * n)) for p in range(v.shape[0])])
    e = np.exp(z - z.max())
    p_ = e / e.sum()
    d2 = p_ - t
    g2 = np.array([[d2[p] * of[m] for m in range(k * n)] for p in range(len(d2))])
    v_new = v - gamma * g2
    vb = v_new if fc_first else v
    d1 = np.array([[sum(d2[p] * vb[p, c * n + i] for p in range(len(d2))) * on[c, i] for i in range(n)]
                   for c in range(k)])
    g1 = np.array([[sum(x[i] * d1[c, i] for i in range(n)), sum(sx[i] * d1[c, i] for i in range(n))]
                   for c in range(k)])
    return dict(y=y, o_F=of, z=z, P=p_, delta_out=d2, g2=g2, v_updated=v_new, delta_conv=d1, g1=g1,
                w_updated=w - alpha * g1, b_updated=b - beta * d1.sum(axis=1))


def oracle_worked_example():
    from gmf_gcnn import worked_example as wx

    return oracle_first_iteration(wx.INPUT, wx.CONV_WEIGHTS, wx.BIASES, wx.FC_WEIGHTS, wx.TARGET,
                                  wx.STEP_W, wx.STEP_B, wx.STEP_V, wx.UPDATE_ORDER == "fc-first")


@pytest.fixture
def ref_graph():
    return build_graph(ref_weights())
