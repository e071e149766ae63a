import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lifmap.errors import ConversionError, DomainError, LifmapError, ShapeError
from lifmap.fixtures import load_dataset, random_convnet, random_images, random_mlp, save_dataset
from lifmap.mapping import bias_from_params
from lifmap.network import (Conv, Dense, Flatten, MaxPool, NetworkSpec, SimConfig, ann_forward,
                            convert, run_snn)
from lifmap.neuron import NeuronParams, ResetMode
from lifmap.weights import save_weights


def identity_net(scale=1.0, n=2):
    return NetworkSpec((n,), [Dense("fc1", n, weights=scale * np.eye(n))])


# --- shapes -------------------------------------------------------------------

def test_convnet_shapes():
    net = random_convnet()
    assert net.shapes() == [(8, 8, 4), (4, 4, 4), (64,), (10,)]
    assert net.output_shape == (10,)


def test_shape_mismatch_detected():
    net = NetworkSpec((3,), [Dense("fc1", 2, weights=np.ones((2, 4)))])
    with pytest.raises(ShapeError):
        net.shapes()
    with pytest.raises(ShapeError):
        NetworkSpec((4, 4, 1), [Dense("fc1", 2)]).shapes()


def test_unbound_weights_rejected():
    with pytest.raises(LifmapError):
        ann_forward(NetworkSpec((2,), [Dense("fc1", 2)]), [0.5, 0.5])


# --- conversion ---------------------------------------------------------------

def test_convert_structural_equivalence():
    ann = random_convnet()
    snn = convert(ann)
    assert snn.mode == "snn" and ann.mode == "ann"
    assert snn.shapes() == ann.shapes()
    assert [type(a) for a in ann.layers] == [type(s) for s in snn.layers]
    for a, s in zip(ann.weighted_layers(), snn.weighted_layers()):
        assert a.weights.tobytes() == s.weights.tobytes()
        assert s.neuron == NeuronParams(c_m=1.0, g_l=0.0, v_th=1.0)


def test_convert_slope_sets_capacitance():
    ann = identity_net()
    ann.layers[0].slope = 0.5
    assert convert(ann).layers[0].neuron.c_m == 2.0


def test_convert_zero_bias_refuses_bias():
    ann = identity_net()
    ann.layers[0].bias = np.array([0.0, -1.0])
    with pytest.raises(ConversionError) as info:
        convert(ann)
    assert info.value.offenders[0][:2] == ("fc1", 1)
    assert convert(ann, drop_bias=True).layers[0].bias is None


def test_convert_bias_to_conductance_base_neuron():
    b = bias_from_params(0.5, NeuronParams(g_l=3.0))
    ann = NetworkSpec((2,), [Dense("fc1", 1, weights=np.array([[0.3, 0.2]]), bias=np.array([b]))])
    snn = convert(ann, "bias_to_conductance")
    assert snn.layers[0].neuron[0].g_l == pytest.approx(3.0, rel=1e-12)


def test_convert_bias_mode_domain_violation():
    ann = NetworkSpec((2,), [Dense("fc1", 2, weights=np.array([[0.6, 0.6], [0.3, 0.2]]),
                                   bias=np.array([-1.0, -1.0]))])
    with pytest.raises(ConversionError) as info:
        convert(ann, "bias_to_conductance")
    assert [o[1] for o in info.value.offenders] == [0]
    assert isinstance(info.value, DomainError)


def test_convert_rejects_snn_and_unknown_mode():
    with pytest.raises(DomainError):
        convert(convert(identity_net()))
    with pytest.raises(DomainError):
        convert(identity_net(), "magic")


def test_convert_reset_mode_option():
    snn = convert(identity_net(), reset_mode=ResetMode.ZERO)
    assert snn.layers[0].neuron.reset_mode is ResetMode.ZERO


# --- forward passes -----------------------------------------------------------

def test_ann_identity_label():
    res = ann_forward(identity_net(), [0.2, 0.7])
    assert res.label == 1
    np.testing.assert_allclose(res.output[0], [2.0, 7.0])


def test_ann_base_neuron_neuron():
    ann = NetworkSpec((2,), [Dense("fc1", 1, weights=np.array([[0.3, 0.2]]),
                                   bias=np.array([-2.16]))])
    # inputs in [0, 1] scaled by 20 Hz
    assert ann_forward(ann, [1.0, 1.0], range_scale=20.0).output[0, 0] == pytest.approx(7.84)


def test_ann_zero_input_label_zero():
    res = ann_forward(random_mlp(), np.zeros(64))
    assert np.all(res.output == 0) and res.label == 0


def test_snn_zero_input():
    res = run_snn(convert(random_mlp()), np.zeros(64))
    assert res.output_counts.sum() == 0 and res.label == 0


def test_snn_identity_counts():
    snn = convert(identity_net(0.6))
    res = run_snn(snn, [1.0, 0.5], SimConfig(t_window=3.0, range_scale=10.0))
    # exact arithmetic gives [18, 9]; accumulated soft-reset rounding can land
    # one ulp under a threshold multiple, so check the rate bound instead
    rates = res.output_counts[0] / 3.0
    assert np.all(np.abs(rates - [6.0, 3.0]) <= 1 / 3 + 1e-9)
    assert res.label == 0


def test_strict_inputs():
    net = identity_net()
    with pytest.raises(DomainError):
        ann_forward(net, [1.5, 0.2], strict=True)
    clipped = ann_forward(net, [1.5, -0.2])
    np.testing.assert_allclose(clipped.output[0], [10.0, 0.0])
    with pytest.raises(DomainError):
        run_snn(convert(net), [1.5, 0.2], SimConfig(strict=True))


def test_input_shape_mismatch():
    with pytest.raises(ShapeError):
        ann_forward(identity_net(), np.zeros((3, 5)))


def test_run_snn_requires_snn_mode():
    with pytest.raises(DomainError):
        run_snn(identity_net(), [0.1, 0.2])


@given(st.integers(1, 7), st.integers(0, 1000))
def test_batching_does_not_change_results(batch_size, seed):
    snn = convert(random_mlp(sizes=(8, 6, 3)))
    x = random_images(seed, 5, (8,))
    a = run_snn(snn, x, SimConfig(t_window=1.0, batch_size=batch_size))
    b = run_snn(snn, x, SimConfig(t_window=1.0, batch_size=5))
    for la, lb in zip(a.layer_outputs, b.layer_outputs):
        assert la.tobytes() == lb.tobytes()
    np.testing.assert_array_equal(a.labels, b.labels)


def test_run_is_deterministic():
    snn = convert(random_convnet())
    x = random_images(1, 3, (8, 8, 1))
    a, b = run_snn(snn, x), run_snn(snn, x)
    assert a.output_counts.tobytes() == b.output_counts.tobytes()


def test_convnet_single_input_unbatched():
    snn = convert(random_convnet())
    res = run_snn(snn, random_images(1, 1, (8, 8, 1))[0])
    assert not res.batched and isinstance(res.label, int)


def test_label_tie_break_smallest_index():
    ann = NetworkSpec((2,), [Dense("fc1", 3, weights=np.array([[0.5, 0], [0.5, 0], [0, 0.1]]))])
    assert ann_forward(ann, [1.0, 0.0]).label == 0
    assert run_snn(convert(ann), [1.0, 0.0]).label == 0


# --- JSON round trip ----------------------------------------------------------

def test_spec_json_round_trip_with_weights(tmp_path):
    ann = random_convnet()
    save_weights(tmp_path / "w.json", {ly.name: ly.weights for ly in ann.weighted_layers()})
    ann.save(tmp_path / "ann.json", weights_manifest="w.json")
    back = NetworkSpec.load(tmp_path / "ann.json")
    assert back.shapes() == ann.shapes()
    for a, b in zip(ann.weighted_layers(), back.weighted_layers()):
        np.testing.assert_array_equal(b.weights, a.weights.astype(np.float32))


def test_snn_spec_round_trip_per_unit_neurons(tmp_path):
    b = bias_from_params(0.5, NeuronParams(g_l=3.0))
    ann = NetworkSpec((2,), [Dense("fc1", 2, weights=np.array([[0.3, 0.2], [0.1, 0.1]]),
                                   bias=np.array([b, 0.0]))])
    snn = convert(ann, "bias_to_conductance")
    snn.save(tmp_path / "snn.json")
    back = NetworkSpec.load(tmp_path / "snn.json")
    assert back.mode == "snn"
    assert back.layers[0].neuron == snn.layers[0].neuron


def test_softmax_layers_dropped():
    doc = {"format_version": 1, "mode": "ann", "input_shape": [2],
           "layers": [{"kind": "dense", "name": "fc1", "units": 2}, {"kind": "softmax"}]}
    net = NetworkSpec.from_dict(doc)
    assert len(net.layers) == 1


def test_unknown_layer_kind():
    doc = {"input_shape": [2], "layers": [{"kind": "lstm"}]}
    with pytest.raises(ShapeError):
        NetworkSpec.from_dict(doc)


def test_network_spec_json_is_stable(tmp_path):
    ann = random_mlp()
    ann.save(tmp_path / "a.json", "w.json")
    ann.save(tmp_path / "b.json", "w.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert json.loads((tmp_path / "a.json").read_text())["weights_manifest"] == "w.json"


def test_conv_layer_manual_network():
    k = np.ones((1, 1, 1, 1))
    net = NetworkSpec((2, 2, 1), [Conv("c", 1, (1, 1), weights=k), MaxPool("p", (2, 2)),
                                  Flatten()])
    res = run_snn(convert(net), np.array([[0.1, 0.9], [0.3, 0.2]])[..., None])
    assert res.output_counts[0, 0] == 27


# --- datasets -----------------------------------------------------------------

def test_dataset_round_trip(tmp_path):
    x = random_images(3, 4, (8, 8, 1))
    save_dataset(tmp_path / "d", x, [1, 0, 1, 0])
    y, labels = load_dataset(tmp_path / "d")
    np.testing.assert_array_equal(y, x.astype(np.float32))
    assert labels.tolist() == [1, 0, 1, 0]
