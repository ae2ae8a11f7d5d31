import numpy as np
import pytest

from surgact import _kernels
from surgact._kernels import attention_numpy, available_backends, get_backend, use_backend

BACKENDS = available_backends()


def random_qkv(rng, g=4, sq=5, sk=7, dh=6):
    return (rng.normal(size=(g, sq, dh)), rng.normal(size=(g, sk, dh)),
            rng.normal(size=(g, sk, dh)))


@pytest.mark.parametrize("backend", BACKENDS)
def test_softmax_rows_normalized(backend):
    rng = np.random.default_rng(0)
    q, k, v = random_qkv(rng)
    _, attn = get_backend(backend).attn_forward(q, k, v)
    assert np.allclose(attn.sum(axis=-1), 1.0, atol=1e-12)
    assert (attn >= 0).all()


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")
def test_forward_backend_parity():
    rng = np.random.default_rng(1)
    for shape in [(1, 1, 1), (3, 5, 4), (8, 9, 16), (2, 17, 8)]:
        q, k, v = random_qkv(rng, g=shape[0], sq=shape[1], sk=shape[1] + 2,
                             dh=shape[2])
        o1, a1 = attention_numpy.attn_forward(q, k, v)
        o2, a2 = get_backend("cython").attn_forward(q, k, v)
        assert np.abs(o1 - o2).max() < 1e-12
        assert np.abs(a1 - a2).max() < 1e-12


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")
def test_backward_backend_parity():
    rng = np.random.default_rng(2)
    q, k, v = random_qkv(rng, g=5, sq=6, sk=9, dh=8)
    out, attn = attention_numpy.attn_forward(q, k, v)
    d_out = rng.normal(size=out.shape)
    g1 = attention_numpy.attn_backward(d_out, attn, q, k, v)
    g2 = get_backend("cython").attn_backward(d_out, attn, q, k, v)
    for a, b in zip(g1, g2):
        assert np.abs(a - b).max() < 1e-12


@pytest.mark.parametrize("backend", BACKENDS)
def test_backward_matches_finite_differences(backend):
    rng = np.random.default_rng(3)
    q, k, v = random_qkv(rng, g=2, sq=3, sk=4, dh=3)
    mod = get_backend(backend)
    d_out = rng.normal(size=(2, 3, 3))

    def loss(q, k, v):
        out, _ = mod.attn_forward(q, k, v)
        return float((out * d_out).sum())

    out, attn = mod.attn_forward(q, k, v)
    dq, dk, dv = mod.attn_backward(d_out, attn, q, k, v)
    h = 1e-6
    for arr, grad in ((q, dq), (k, dk), (v, dv)):
        flat = arr.ravel()
        for i in range(0, flat.size, 5):
            orig = flat[i]
            flat[i] = orig + h
            lp = loss(q, k, v)
            flat[i] = orig - h
            lm = loss(q, k, v)
            flat[i] = orig
            fd = (lp - lm) / (2 * h)
            assert abs(fd - grad.ravel()[i]) < 1e-6 * max(1.0, abs(fd))


def test_selection_context_manager():
    original = _kernels.backend_name()
    with use_backend("numpy"):
        assert _kernels.backend_name() == "numpy"
        q = np.zeros((1, 2, 2))
        out, attn = _kernels.attn_forward(q, q, q)
        assert out.shape == (1, 2, 2)
    assert _kernels.backend_name() == original


def test_unknown_backend_rejected():
    with pytest.raises(ValueError, match="unknown kernel backend"):
        get_backend("fortran")
