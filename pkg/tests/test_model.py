import numpy as np
import pytest

from sogtok.errors import CheckpointError, DimensionMismatch, ValidationError
from sogtok.attributes import ImportanceStrategy
from sogtok.model import (
    Adam,
    Codebook,
    DecoderParams,
    EncoderParams,
    TokenizerModel,
    backward,
    compute_loss,
    decode_and_reconstruct,
    encode,
    forward,
    init_params,
    load_checkpoint,
    normalized_adjacency,
    quantize,
    save_checkpoint,
)


def random_symmetric_adjacency(n, rng, p=0.4):
    a = (rng.random((n, n)) < p).astype(float)
    a = np.triu(a, 1)
    return a + a.T


def test_normalized_adjacency_single():
    assert normalized_adjacency(np.zeros((1, 1))).tolist() == [[1.0]]


def test_normalized_adjacency_edge():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(normalized_adjacency(a), 0.5)


def test_normalized_adjacency_disconnected():
    assert np.array_equal(normalized_adjacency(np.zeros((2, 2))), np.eye(2))


def test_encode_zero_features():
    rng = np.random.default_rng(0)
    enc, _ = init_params(4, 4, 3, 2, rng)
    a = random_symmetric_adjacency(5, rng)
    h = encode(normalized_adjacency(a), np.zeros((5, 4)), enc)
    assert np.array_equal(h, np.zeros((5, 3)))


def test_encode_identity_weights_single_node():
    enc = EncoderParams(w1=np.eye(3), w2=np.eye(3))
    x = np.array([[-1.0, 0.5, 2.0]])
    h = encode(np.array([[1.0]]), x, enc)
    assert np.array_equal(h, np.maximum(x, 0.0))


def test_encode_output_layer_linear():
    rng = np.random.default_rng(1)
    enc, _ = init_params(4, 4, 3, 2, rng)
    a = normalized_adjacency(random_symmetric_adjacency(5, rng))
    x = rng.normal(size=(5, 4))
    h1 = encode(a, x, enc)
    h2 = encode(a, x, EncoderParams(w1=enc.w1, w2=2.0 * enc.w2))
    assert np.allclose(h2, 2.0 * h1)


def test_encode_dimension_mismatch():
    rng = np.random.default_rng(2)
    enc, _ = init_params(4, 4, 3, 2, rng)
    with pytest.raises(DimensionMismatch):
        encode(np.eye(2), np.zeros((2, 5)), enc)


def test_quantize_simple_cases():
    cb = Codebook(entries=np.array([[1.0, 0.0], [0.0, 2.0]]))
    sel = quantize(np.array([[0.0, 0.0]]), cb)
    assert sel.indices.tolist() == [0]
    sel = quantize(np.array([[0.0, 2.0]]), cb)
    assert sel.indices.tolist() == [1]
    assert np.array_equal(sel.quantized[0], cb.entries[1])


def test_quantize_tie_lowest_index():
    cb = Codebook(entries=np.array([[1.0, 0.0], [-1.0, 0.0]]))
    sel = quantize(np.array([[0.0, 0.0]]), cb)
    assert sel.indices.tolist() == [0]


def test_quantize_matches_exhaustive_scan():
    rng = np.random.default_rng(3)
    cb = Codebook(entries=rng.normal(size=(8, 4)))
    h = rng.normal(size=(50, 4))
    sel = quantize(h, cb)
    for i in range(50):
        dists = [np.sum((h[i] - cb.entries[j]) ** 2) for j in range(8)]
        best = min(range(8), key=lambda j: (dists[j], j))
        assert sel.indices[i] == best
        assert np.array_equal(sel.quantized[i], cb.entries[best])


def test_decode_identity_example():
    dec = DecoderParams(wd=np.eye(2))
    q = np.array([[0.0, 1.0], [1.0, 0.0]])
    xhat, arec = decode_and_reconstruct(q, dec)
    assert np.array_equal(arec, np.eye(2))


def test_decode_zero():
    dec = DecoderParams(wd=np.eye(2))
    _, arec = decode_and_reconstruct(np.zeros((3, 2)), dec)
    assert np.array_equal(arec, np.zeros((3, 3)))


def test_reconstruction_symmetric():
    rng = np.random.default_rng(4)
    dec = DecoderParams(wd=rng.normal(size=(3, 5)))
    _, arec = decode_and_reconstruct(rng.normal(size=(6, 3)), dec)
    assert np.array_equal(arec, arec.T)


def test_loss_values():
    cb = Codebook(entries=np.array([[0.0, 0.0], [5.0, 5.0]]))
    h = np.array([[1.0, 0.0]])
    sel = quantize(h, cb)
    a = np.array([[0.0]])
    loss = compute_loss(a, np.array([[0.0]]), h, sel, beta=0.5)
    assert loss.update == pytest.approx(1.0)
    assert loss.commitment == pytest.approx(1.0)
    assert loss.reconstruction == 0.0
    assert loss.total == pytest.approx(1.0 + 0.5)


def test_loss_reconstruction_example():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    arec = np.eye(2)
    cb = Codebook(entries=np.zeros((2, 2)) + [[0.0, 0.0], [9.0, 9.0]])
    h = np.zeros((2, 2))
    sel = quantize(h, cb)
    loss = compute_loss(a, arec, h, sel, beta=0.25)
    assert loss.reconstruction == pytest.approx(4.0)


def test_loss_total_identity():
    rng = np.random.default_rng(5)
    cb = Codebook(entries=rng.normal(size=(4, 3)))
    h = rng.normal(size=(6, 3))
    sel = quantize(h, cb)
    a = random_symmetric_adjacency(6, rng)
    _, arec = decode_and_reconstruct(sel.quantized, DecoderParams(wd=rng.normal(size=(3, 4))))
    loss = compute_loss(a, arec, h, sel, beta=0.25)
    lhs = loss.total
    rhs = loss.reconstruction + loss.update + loss.beta * loss.commitment
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def _gradient_instance(seed, n=6, d_s=8, d_h=8, d=4, d_r=4, k=4, beta=0.25):
    """Instance with safe margins at the relu kink and codebook boundaries."""
    rng = np.random.default_rng(seed)
    a = random_symmetric_adjacency(n, rng)
    x = rng.normal(size=(n, d_s))
    enc, dec = init_params(d_s, d_h, d, d_r, rng)
    cb = Codebook(entries=rng.normal(size=(k, d)))
    state = forward(a, x, enc, dec, cb, beta)
    if np.abs(state.z1).min() < 1e-3:
        return None
    return a, x, enc, dec, cb, state


def _max_rel_error(analytic, fd):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-3)
    return float((np.abs(analytic - fd) / denom).max())


def finite_difference_check(seed, beta=0.25, eps=1e-5):
    """Central differences of the stop-gradient-respecting objective.

    The quantization indices, the quantized values feeding terms marked as
    constants, and the straight-through offset are frozen at the base
    point, which is exactly the function the analytic backward pass
    differentiates.
    """
    instance = _gradient_instance(seed, beta=beta)
    if instance is None:
        return None
    a, x, enc, dec, cb, state = instance
    grads = backward(state, enc, dec, cb, straight_through=True)
    h0 = state.h.copy()
    idx0 = state.sel.indices.copy()
    q0 = state.sel.quantized.copy()
    offset = q0 - h0
    anorm = state.anorm

    def objective():
        z1 = anorm @ x @ enc.w1
        h = anorm @ np.maximum(z1, 0.0) @ enc.w2
        xhat = (h + offset) @ dec.wd
        recon = ((a - xhat @ xhat.T) ** 2).sum()
        update = ((h0 - cb.entries[idx0]) ** 2).sum()
        commit = ((h - q0) ** 2).sum()
        return recon + update + beta * commit

    worst = 0.0
    for param, grad in (
        (enc.w1, grads.w1),
        (enc.w2, grads.w2),
        (dec.wd, grads.wd),
        (cb.entries, grads.codebook),
    ):
        fd = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            i = it.multi_index
            orig = param[i]
            param[i] = orig + eps
            up = objective()
            param[i] = orig - eps
            down = objective()
            param[i] = orig
            fd[i] = (up - down) / (2 * eps)
            it.iternext()
        worst = max(worst, _max_rel_error(grad, fd))
    return worst


def test_backward_matches_finite_differences():
    errors = []
    seed = 0
    while len(errors) < 5:
        err = finite_difference_check(seed)
        seed += 1
        if err is not None:
            errors.append(err)
    assert max(errors) < 1e-4


def test_backward_warmup_pure_autoencoder():
    rng = np.random.default_rng(17)
    a = random_symmetric_adjacency(6, rng)
    x = rng.normal(size=(6, 8))
    enc, dec = init_params(8, 8, 4, 3, rng)
    state = forward(a, x, enc, dec, None, 0.25)
    assert np.abs(state.z1).min() > 1e-3
    grads = backward(state, enc, dec, None)
    assert grads.codebook is None
    anorm = state.anorm
    eps = 1e-5

    def objective():
        z1 = anorm @ x @ enc.w1
        h = anorm @ np.maximum(z1, 0.0) @ enc.w2
        xhat = h @ dec.wd
        return ((a - xhat @ xhat.T) ** 2).sum()

    for param, grad in ((enc.w1, grads.w1), (enc.w2, grads.w2), (dec.wd, grads.wd)):
        fd = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            i = it.multi_index
            orig = param[i]
            param[i] = orig + eps
            up = objective()
            param[i] = orig - eps
            down = objective()
            param[i] = orig
            fd[i] = (up - down) / (2 * eps)
            it.iternext()
        assert _max_rel_error(grad, fd) < 1e-6


def test_zero_loss_zero_gradients():
    # quantized rows decode to an exact reconstruction of an empty graph
    enc = EncoderParams(w1=np.zeros((2, 2)), w2=np.zeros((2, 2)))
    dec = DecoderParams(wd=np.zeros((2, 2)))
    cb = Codebook(entries=np.vstack([np.zeros(2), np.ones(2)]))
    a = np.zeros((3, 3))
    state = forward(a, np.zeros((3, 2)), enc, dec, cb, 0.25)
    assert state.loss.total == 0.0
    grads = backward(state, enc, dec, cb)
    assert not grads.w1.any() and not grads.w2.any() and not grads.wd.any()
    assert not grads.codebook[1].any()  # unselected entry: empty-sum gradient


def test_unselected_entry_zero_gradient():
    rng = np.random.default_rng(23)
    cb = Codebook(entries=np.vstack([rng.normal(size=(3, 4)), [[99.0] * 4]]))
    a = random_symmetric_adjacency(5, rng)
    x = rng.normal(size=(5, 6))
    enc, dec = init_params(6, 6, 4, 3, rng)
    state = forward(a, x, enc, dec, cb, 0.25)
    assert 3 not in state.sel.indices
    grads = backward(state, enc, dec, cb)
    assert not grads.codebook[3].any()


def test_adam_first_step_sign():
    adam = Adam({"p": 0.1})
    p = np.array([1.0, -1.0, 0.5])
    g = np.array([0.3, -0.2, 0.0])
    adam.step({"p": p}, {"p": g})
    # bias-corrected first step is ~ -lr * sign(g)
    assert p[0] == pytest.approx(1.0 - 0.1, abs=1e-6)
    assert p[1] == pytest.approx(-1.0 + 0.1, abs=1e-6)
    assert p[2] == 0.5


def test_adam_zero_gradient_identity():
    adam = Adam({"p": 0.1})
    p = np.array([2.0, 3.0])
    adam.step({"p": p}, {"p": np.zeros(2)})
    assert np.array_equal(p, [2.0, 3.0])


def test_adam_constant_gradient_monotone():
    adam = Adam({"p": 0.05})
    p = np.array([0.0])
    hist = []
    for _ in range(5):
        adam.step({"p": p}, {"p": np.array([1.0])})
        hist.append(p[0])
    assert all(b < a for a, b in zip(hist, hist[1:]))


def test_adam_lr_zero_identity():
    adam = Adam({"p": 0.0})
    p = np.array([1.5])
    adam.step({"p": p}, {"p": np.array([7.0])})
    assert p[0] == 1.5


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(31)
    enc, dec = init_params(8, 8, 4, 3, rng)
    model = TokenizerModel(
        enc=enc,
        dec=dec,
        codebook=Codebook(entries=rng.normal(size=(6, 4))),
        beta=0.3,
        strategy=ImportanceStrategy("pagerank", seed=2),
        seed=31,
        manifest={"note": "test"},
    )
    path = tmp_path / "model.sogtok"
    save_checkpoint(model, path)
    assert path.read_bytes()[:7] == b"SOGTOK1"
    loaded = load_checkpoint(path)
    assert np.array_equal(loaded.enc.w1, model.enc.w1)
    assert np.array_equal(loaded.enc.w2, model.enc.w2)
    assert np.array_equal(loaded.dec.wd, model.dec.wd)
    assert np.array_equal(loaded.codebook.entries, model.codebook.entries)
    assert loaded.beta == model.beta
    assert loaded.strategy == model.strategy
    assert loaded.manifest == {"note": "test"}
    # byte-identical re-save
    path2 = tmp_path / "model2.sogtok"
    save_checkpoint(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_codebook_validation():
    with pytest.raises(ValidationError):
        Codebook(entries=np.zeros((1, 4)))
    with pytest.raises(ValidationError):
        Codebook(entries=np.array([[np.nan, 0.0], [0.0, 1.0]]))
