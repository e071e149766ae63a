import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lifmap.coding import CodingConfig, SpikeTrain, decode, encode, encode_raster
from lifmap.errors import GridMismatchError, ShapeError
from lifmap.layers import (ConvLayerSpec, DenseLayerSpec, PoolLayerSpec, SpikeVolume, ann_conv,
                           ann_dense, ann_maxpool, conv_forward, conv_raster, dense_forward,
                           dense_raster, maxpool_forward, maxpool_raster, maxpool_select)
from lifmap.neuron import NeuronParams

DT = 0.01
IF = NeuronParams(c_m=1.0, g_l=0.0, v_th=1.0)


def volume_from_rates(rates, t_window=3.0):
    n = int(round(t_window / DT))
    return SpikeVolume(encode_raster(np.asarray(rates, dtype=float), DT, n), DT)


def count_train(count, n_steps=300, offset=0):
    return SpikeTrain(DT, n_steps, np.arange(offset, offset + count))


def brute_positions(size, k, stride, padding):
    """Count window placements by walking every candidate origin."""
    count = 0
    origin = -padding
    while origin + k <= size + padding:
        count += 1
        origin += stride
    return count


# --- dense --------------------------------------------------------------------

def test_dense_empty_inputs():
    spec = DenseLayerSpec(np.ones((3, 2)), IF)
    out = dense_forward([SpikeTrain(DT, 300)] * 2, spec)
    assert all(tr.count == 0 for tr in out)


def test_dense_identity_rate_conservation():
    cfg = CodingConfig(DT, 3.0, 1.0)
    spec = DenseLayerSpec(0.6 * np.eye(2), IF)
    out = dense_forward([encode(10.0, cfg), encode(5.0, cfg)], spec)
    rates = [decode(tr) for tr in out]
    # 15 * 0.6 lands exactly on a threshold multiple, and the rounded soft-reset
    # residual misses it by one ulp, so the second unit sits right at the bound
    assert abs(rates[0] - 6.0) <= 1 / 3 + 1e-9
    assert abs(rates[1] - 3.0) <= 1 / 3 + 1e-9


def test_dense_negative_weight_never_fires():
    spec = DenseLayerSpec([[-0.5]], IF)
    out = dense_forward([encode(50.0, CodingConfig(DT, 3.0, 1.0))], spec)
    assert out[0].count == 0


def test_dense_grid_mismatch():
    with pytest.raises(GridMismatchError):
        dense_forward([SpikeTrain(DT, 300), SpikeTrain(DT, 100)], DenseLayerSpec(np.ones((1, 2))))


def test_dense_shape_mismatch():
    with pytest.raises(ShapeError):
        dense_raster(np.zeros((3, 10), np.uint8), DenseLayerSpec(np.ones((1, 2))), DT)


def test_dense_batched_matches_single():
    rng = np.random.default_rng(0)
    w = rng.normal(0, 0.4, (4, 6))
    r = encode_raster(rng.uniform(0, 30, (3, 6)).round(), DT, 300)
    spec = DenseLayerSpec(w, IF)
    batched = dense_raster(r, spec, DT)
    for b in range(3):
        np.testing.assert_array_equal(batched[b], dense_raster(r[b], spec, DT))


# --- conv ---------------------------------------------------------------------

def test_conv_unit_kernel_is_identity():
    vol = volume_from_rates(np.random.default_rng(1).integers(0, 40, (4, 5, 2)))
    kernel = np.zeros((1, 1, 2, 2))
    kernel[0, 0, 0, 0] = kernel[0, 0, 1, 1] = 1.0
    out = conv_forward(vol, ConvLayerSpec(kernel, 1, 0, IF))
    np.testing.assert_array_equal(out.spikes, vol.spikes)


def test_conv_zero_kernel_is_silent():
    vol = volume_from_rates(np.full((4, 4, 1), 20.0))
    out = conv_forward(vol, ConvLayerSpec(np.zeros((2, 2, 1, 3)), 1, 0, IF))
    assert out.spikes.sum() == 0
    assert out.shape == (3, 3, 3)


def test_conv_matches_rate_domain_reference():
    rng = np.random.default_rng(2)
    # integer rates over 3 s encode exactly, so only output quantization remains
    rates = rng.integers(0, 40, (4, 4, 1)).astype(float)
    kernel = rng.uniform(0.0, 0.3, (2, 2, 1, 2))
    vol = volume_from_rates(rates)
    out = conv_forward(vol, ConvLayerSpec(kernel, 1, 0, IF)).rates()
    ref = ann_conv(rates, kernel, 1, 0)
    assert out.shape == ref.shape == (3, 3, 2)
    assert np.all(np.abs(out - ref) <= 1 / 3 + 0.05 * ref + 1e-9)


def test_conv_kernel_larger_than_input():
    with pytest.raises(ShapeError):
        ConvLayerSpec(np.zeros((5, 5, 1, 1))).output_shape((4, 4, 1))


def test_conv_channel_mismatch():
    with pytest.raises(ShapeError):
        ConvLayerSpec(np.zeros((2, 2, 3, 1))).output_shape((4, 4, 1))


@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 4), st.integers(1, 4),
       st.integers(1, 3), st.integers(0, 2))
def test_conv_output_shape_brute_force(h, w, kh, kw, stride, padding):
    spec = ConvLayerSpec(np.zeros((kh, kw, 1, 2)), stride, padding)
    if kh > h + 2 * padding or kw > w + 2 * padding:
        with pytest.raises(ShapeError):
            spec.output_shape((h, w, 1))
        return
    assert spec.output_shape((h, w, 1)) == (
        brute_positions(h, kh, stride, padding), brute_positions(w, kw, stride, padding), 2)


@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 3), st.integers(1, 3),
       st.integers(1, 3))
def test_pool_output_shape_brute_force(h, w, ph, pw, stride):
    spec = PoolLayerSpec((ph, pw), stride)
    if ph > h or pw > w:
        with pytest.raises(ShapeError):
            spec.output_shape((h, w, 2))
        return
    assert spec.output_shape((h, w, 2)) == (
        brute_positions(h, ph, stride, 0), brute_positions(w, pw, stride, 0), 2)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 2), st.integers(1, 3),
       st.integers(0, 2**31 - 1))
def test_full_kernel_conv_equals_dense(h, w, c, nf, seed):
    """A kernel covering the whole input is a dense layer on the flattened volume."""
    rng = np.random.default_rng(seed)
    rates = rng.integers(0, 60, (h, w, c)).astype(float)
    kernel = rng.normal(0, 0.5, (h, w, c, nf))
    vol = volume_from_rates(rates, 1.0)
    conv = conv_raster(vol.spikes, ConvLayerSpec(kernel, 1, 0, IF), DT)
    dense = dense_raster(vol.spikes.reshape(h * w * c, -1),
                         DenseLayerSpec(kernel.reshape(h * w * c, nf).T, IF), DT)
    assert conv.shape[:3] == (1, 1, nf)
    np.testing.assert_array_equal(conv.reshape(nf, -1), dense)


def test_conv_per_filter_neurons():
    vol = volume_from_rates(np.full((2, 2, 1), 10.0))
    kernel = np.ones((1, 1, 1, 2)) * 0.5
    out = conv_raster(vol.spikes, ConvLayerSpec(kernel, 1, 0, [IF, IF.replace(c_m=2.0)]), DT)
    counts = out.sum(axis=-1)
    assert np.all(counts[..., 0] == 15) and np.all(counts[..., 1] == 7)


def test_conv_padding_contributes_nothing():
    vol = volume_from_rates(np.full((2, 2, 1), 30.0))
    out = conv_raster(vol.spikes, ConvLayerSpec(np.ones((3, 3, 1, 1)) / 4, 1, 1, IF), DT)
    # every 3x3 window on the padded 4x4 covers exactly the 4 real inputs
    assert np.all(out.sum(axis=-1) == 90)


# --- max-pool -----------------------------------------------------------------

def window_volume(counts):
    counts = np.asarray(counts)
    trains = [[[count_train(int(counts[i, j]), offset=10 * (2 * i + j))]
               for j in range(counts.shape[1])] for i in range(counts.shape[0])]
    return SpikeVolume.from_trains(trains)


def test_maxpool_copies_winner():
    vol = window_volume([[3, 5], [2, 1]])
    out = maxpool_forward(vol, PoolLayerSpec((2, 2)))
    assert out.train(0, 0, 0) == vol.train(0, 1, 0)


def test_maxpool_tie_goes_to_first():
    vol = window_volume([[4, 4], [1, 0]])
    out = maxpool_forward(vol, PoolLayerSpec((2, 2)))
    assert out.train(0, 0, 0) == vol.train(0, 0, 0)
    assert out.train(0, 0, 0) != vol.train(0, 1, 0)


def test_maxpool_empty_window():
    out = maxpool_forward(window_volume([[0, 0], [0, 0]]), PoolLayerSpec((2, 2)))
    assert out.train(0, 0, 0).count == 0


def test_ann_maxpool_example():
    assert ann_maxpool(np.array([[3, 5], [2, 1]], float)[..., None], PoolLayerSpec((2, 2)))[0, 0, 0] == 5


@given(st.integers(2, 6), st.integers(2, 6), st.integers(1, 3), st.integers(1, 2),
       st.integers(0, 2**31 - 1))
def test_pooling_commutes_with_decoding(h, w, c, stride, seed):
    rng = np.random.default_rng(seed)
    rates = rng.integers(0, 30, (h, w, c)).astype(float)
    vol = volume_from_rates(rates, 1.0)
    spec = PoolLayerSpec((2, 2), stride)
    pooled = maxpool_forward(vol, spec).rates()
    ref = ann_maxpool(vol.rates(), spec)
    np.testing.assert_allclose(pooled, ref)
    winners = maxpool_select(vol.counts(), spec)
    assert winners.shape == ref.shape


def test_maxpool_batched_matches_single():
    rng = np.random.default_rng(3)
    r = encode_raster(rng.integers(0, 20, (2, 4, 4, 2)).astype(float), DT, 100)
    spec = PoolLayerSpec((2, 2))
    out = maxpool_raster(r, spec)
    for b in range(2):
        np.testing.assert_array_equal(out[b], maxpool_raster(r[b], spec))


# --- rate-domain references ----------------------------------------------------

def test_ann_dense_identity():
    x = np.array([0.2, 3.0, 7.5])
    np.testing.assert_array_equal(ann_dense(x, np.eye(3)), x)


def test_ann_dense_base_neuron():
    assert ann_dense([20.0, 20.0], [[0.3, 0.2]], bias=-2.16)[0] == pytest.approx(7.84)


def test_ann_dense_shape_error():
    with pytest.raises(ShapeError):
        ann_dense(np.ones(3), np.ones((2, 2)))


def test_ann_conv_brute_force():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(5, 4, 2))
    k = rng.normal(size=(3, 2, 2, 3))
    out = ann_conv(x, k, stride=2, padding=1, bias=0.1)
    pad = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    ref = np.zeros(out.shape)
    for oi in range(out.shape[0]):
        for oj in range(out.shape[1]):
            for f in range(3):
                ref[oi, oj, f] = max(0.0, np.sum(pad[2 * oi:2 * oi + 3, 2 * oj:2 * oj + 2] * k[..., f]) + 0.1)
    np.testing.assert_allclose(out, ref, atol=1e-12)


def test_spike_volume_from_trains_grid_check():
    with pytest.raises(GridMismatchError):
        SpikeVolume.from_trains([[[SpikeTrain(DT, 10)], [SpikeTrain(DT, 20)]]])
