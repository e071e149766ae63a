"""Command line front-end.

Exit codes: 0 ok, 2 usage, 3 domain error, 4 I/O error.
Every CSV starts with a ``# lifmap <schema> v<N>`` line followed by the
header row.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import evalkit, experiments, fixtures
from .coding import CodingConfig, encode
from .errors import DomainError, LifmapError, ManifestError
from .mapping import (ReluParams, bias_from_params, min_firing_frequency, params_from_relu,
                      opposite_sign_bias, slope_from_params)
from .network import NetworkSpec, SimConfig, ann_forward, convert, run_snn
from .neuron import NeuronParams, ResetMode, run
from .weights import save_weights

log = logging.getLogger("lifmap")

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4
CSV_VERSION = 1
MODES = (ResetMode.LINEAR, ResetMode.ZERO)


class UsageError(Exception):
    pass


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    return str(v)


def write_csv(path, schema, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# lifmap {schema} v{CSV_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """Read a CSV written by :func:`write_csv` into a list of dicts."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _neuron_params(args, reset_mode=ResetMode.LINEAR):
    return NeuronParams(c_m=args.c_m, g_l=args.g_l, v_th=args.v_th, reset_mode=reset_mode)


def _range_scale(args, default):
    return default if args.range_scale is None else args.range_scale


def _out(args):
    p = Path(args.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


# --- commands -----------------------------------------------------------------

def cmd_neuron(args):
    if len(args.rates) != len(args.weights):
        raise UsageError("--rates and --weights need the same number of values")
    k = _range_scale(args, 1.0)
    cfg = CodingConfig(args.dt, args.t_window, k)
    trains = [encode(x, cfg) for x in args.rates]
    n = cfg.n_steps
    q = np.zeros(n)
    for tr, w in zip(trains, args.weights):
        q[tr.events] += w
    out = _out(args)
    for mode in MODES:
        params = _neuron_params(args, mode)
        train, trace = run(params, q, args.dt, args.t_window, v0=args.v0)
        fired = np.zeros(n, dtype=int)
        fired[trace.fire_indices] = 1
        rows = zip(range(n), trace.times, trace.h, trace.v, fired)
        write_csv(out / f"trace_{mode.value}.csv", "trace",
                  ["step", "t", "h", "v", "spike"], rows)
        (out / f"train_{mode.value}.txt").write_text(train.dumps())
        print(f"{mode.value}: {train.count} spikes, {train.count / train.t_window:g} Hz")
    return EXIT_OK


def _sweep_configs(args):
    base = _neuron_params(args)
    for value in args.values:
        params, t_window, k = base, args.t_window, _range_scale(args, 1.0)
        if args.axis == "g_l":
            params = base.replace(g_l=value)
        elif args.axis == "c_m":
            params = base.replace(c_m=value)
        elif args.axis == "t_window":
            t_window = value
        elif args.axis == "range_scale":
            k = value
        yield value, params, t_window, k


def cmd_sweep(args):
    header = ["axis", "value", "reset_mode", "output_hz", "relu_hz", "measured_slope",
              "measured_min_hz", "predicted_slope", "predicted_bias", "predicted_min_hz",
              "l2_error"]
    pheader = ["axis", "value", "reset_mode", "f_in", "drive", "output_hz", "relu_hz"]
    rows, points = [], []
    if args.axis == "f_in":
        grid = np.asarray(args.values, dtype=float) * _range_scale(args, 1.0)
        for mode in MODES:
            r = experiments.rate_sweep(_neuron_params(args, mode), args.weights, grid,
                                       args.t_window, args.dt)
            for f, o, ref in zip(r.freqs, r.output, r.relu):
                rows.append(["f_in", f, mode.value, o, ref, r.slope, r.min_freq,
                             r.predicted_slope, r.predicted_bias, r.predicted_min_freq,
                             r.l2_error])
                points.append(["f_in", f, mode.value, f, f * sum(args.weights), o, ref])
    else:
        grid = np.asarray(args.f_grid, dtype=float)
        for value, params, t_window, k in _sweep_configs(args):
            # the range-scale axis rescales a unit input grid, the others sweep Hz directly
            freqs = grid / grid.max() * k if args.axis == "range_scale" else grid * k
            for mode in MODES:
                r = experiments.rate_sweep(params.replace(reset_mode=mode), args.weights,
                                           freqs, t_window, args.dt)
                rows.append([args.axis, value, mode.value, "", "", r.slope, r.min_freq,
                             r.predicted_slope, r.predicted_bias, r.predicted_min_freq,
                             r.l2_error])
                for f, o, ref in zip(r.freqs, r.output, r.relu):
                    points.append([args.axis, value, mode.value, f, f * sum(args.weights), o, ref])
    out = _out(args)
    write_csv(out / "sweep.csv", "sweep", header, rows)
    write_csv(out / "sweep_points.csv", "sweep_points", pheader, points)
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_encode(args):
    cfg = CodingConfig(args.dt, args.t_window, _range_scale(args, 1.0))
    train = encode(args.value, cfg)
    if args.output == "-":
        sys.stdout.write(train.dumps())
    else:
        path = _out(args) / args.output
        path.write_text(train.dumps())
        print(f"{train.count} spikes -> {path}")
    return EXIT_OK


def cmd_map(args):
    if args.direction == "to-lif":
        p = ReluParams(bias=args.bias, slope=args.slope)
        n = params_from_relu(p, sum_w=args.sum_w, v_th=args.v_th)
        result = {"direction": "to-lif", "c_m": n.c_m, "g_l": n.g_l, "v_th": n.v_th,
                  "tau_m": None if math.isinf(n.tau_m) else n.tau_m}
        if args.bias != 0:
            result["roundtrip_bias"] = bias_from_params(args.sum_w, n)
        result["roundtrip_slope"] = slope_from_params(n)
    else:
        n = NeuronParams(c_m=args.c_m, g_l=args.g_l, v_th=args.v_th)
        b = bias_from_params(args.sum_w, n)
        result = {"direction": "to-relu", "slope": slope_from_params(n), "bias": b,
                  "bias_opposite_sign_reading": opposite_sign_bias(args.sum_w, n),
                  "min_rate_hz": -b / args.sum_w}
        if args.finite_window:
            result["min_rate_hz_window"] = min_firing_frequency([args.sum_w], n, args.t_window)
    log.info("bias sign: stored as additive offset (negative); opposite-sign reading "
             "reported for reference")
    print(json.dumps(result, indent=2, sort_keys=True))
    out = Path(args.out_dir) / "map.json" if args.save else None
    if out:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_convert(args):
    ann = NetworkSpec.load(args.ann)
    snn = convert(ann, args.mode, g_l=args.g_l, v_th=args.v_th,
                  reset_mode=ResetMode.parse(args.reset_mode), drop_bias=args.drop_bias)
    manifest = json.loads(Path(args.ann).read_text()).get("weights_manifest")
    out = Path(args.output)
    if manifest:
        src = (Path(args.ann).parent / manifest).resolve()
        try:
            manifest = src.relative_to(out.parent.resolve())
        except ValueError:
            manifest = src
    out.parent.mkdir(parents=True, exist_ok=True)
    snn.save(out, weights_manifest=manifest)
    print(f"wrote {out}")
    return EXIT_OK


def _sim_config(args, t_window=None):
    return SimConfig(dt=args.dt, t_window=args.t_window if t_window is None else t_window,
                     range_scale=_range_scale(args, 10.0), seed=args.seed, strict=args.strict,
                     batch_size=args.batch_size)


def _forward(net, x, cfg):
    if net.mode == "ann":
        return ann_forward(net, x, cfg.range_scale, cfg.strict)
    return run_snn(net, x, cfg)


def cmd_run(args):
    net = NetworkSpec.load(args.net)
    x, labels = fixtures.load_dataset(args.data)
    cfg = _sim_config(args)
    res = _forward(net, x, cfg)
    out = _out(args)
    outputs = res.output.reshape(len(x), -1)
    header = ["index", "label", "true_label"] + [f"out_{j}" for j in range(outputs.shape[1])]
    rows = ([i, int(res.labels[i]), int(labels[i])] + list(outputs[i]) for i in range(len(x)))
    write_csv(out / f"run_{net.mode}.csv", "run", header, rows)
    known = labels >= 0
    if known.any():
        acc = float(np.mean(res.labels[known] == labels[known]))
        print(f"{net.mode}: accuracy vs dataset labels {acc:.4f}")
    print(f"wrote {out / f'run_{net.mode}.csv'}")
    return EXIT_OK


def cmd_compare(args):
    ann = NetworkSpec.load(args.ann)
    snn = NetworkSpec.load(args.snn)
    x, _ = fixtures.load_dataset(args.data)
    cfg = _sim_config(args)
    a = ann_forward(ann, x, cfg.range_scale, cfg.strict)
    s = run_snn(snn, x, cfg)
    rep = evalkit.compare(a, s, cfg.dt * cfg.coding.n_steps, layer=args.layer)
    out = _out(args)
    (out / "report.json").write_text(rep.to_json())
    if rep.data_matrix is not None:
        (out / "data_matrix.csv").write_text(evalkit.matrix_csv(rep.data_matrix))
        (out / "neuron_matrix.csv").write_text(evalkit.matrix_csv(rep.neuron_matrix))
    (out / "confusion.csv").write_text(evalkit.matrix_csv(np.asarray(rep.confusion)))
    print(f"agreement {rep.label_agreement:.4f}, mean correlation {rep.correlation_mean:.4f} "
          f"(strong above {rep.strong_threshold}); report -> {out / 'report.json'}")
    return EXIT_OK


def cmd_error_scan(args):
    nets = None
    if args.ann or args.snn or args.data:
        if not (args.ann and args.snn and args.data):
            raise UsageError("--ann, --snn and --data must be given together")
        nets = (NetworkSpec.load(args.ann), NetworkSpec.load(args.snn),
                fixtures.load_dataset(args.data)[0])
    header = ["t_window", "median_abs_err", "max_abs_err", "bound", "violations", "cases",
              "network_disagreement"]
    rows = []
    for t in args.t_windows:
        rng = np.random.default_rng(args.seed)
        cases = experiments.random_quantization_cases(rng, args.cases, t, args.dt)
        rep = evalkit.error_report([c.expected for c in cases], [c.decoded for c in cases], t)
        dis = float("nan")
        if nets:
            ann, snn, x = nets
            cfg = _sim_config(args, t_window=t)
            dis = float(np.mean(ann_forward(ann, x, cfg.range_scale, cfg.strict).labels
                                != run_snn(snn, x, cfg).labels))
        rows.append([t, rep.median, rep.max, rep.bound, len(rep.violations), len(cases), dis])
        print(f"T={t:g}s median {rep.median:.4g} max {rep.max:.4g} bound {rep.bound:.4g} "
              f"violations {len(rep.violations)}")
    write_csv(_out(args) / "error_scan.csv", "error_scan", header, rows)
    return EXIT_OK


def cmd_gen_fixture(args):
    out = _out(args)
    if args.kind in ("mlp", "convnet"):
        if args.kind == "mlp":
            net = fixtures.random_mlp(args.seed, tuple(args.sizes), args.gain)
            x = fixtures.random_images(args.seed + 1, args.n, net.input_shape)
            labels = None
        else:
            net = fixtures.random_convnet(args.seed, tuple(args.image_shape), args.filters,
                                          n_classes=args.classes, gain=args.gain)
            x = fixtures.random_images(args.seed + 1, args.n, net.input_shape)
            labels = None
        tensors = {ly.name: ly.weights for ly in net.weighted_layers()}
        kinds = {ly.name: ly.kind for ly in net.weighted_layers()}
        save_weights(out / "weights.json", tensors, kinds)
        net.save(out / "ann.json", weights_manifest="weights.json")
        fixtures.save_dataset(out / "data", x, labels)
        print(f"wrote {out / 'ann.json'}, {out / 'weights.json'} and {len(x)} samples")
    elif args.kind == "blobs":
        dim = args.sizes[0]
        x, labels = fixtures.two_class_blobs(args.seed, args.n, dim)
        fixtures.save_dataset(out / "data", x, labels)
        sizes = (dim, args.sizes[1] if len(args.sizes) > 1 else 60, 2)
        net = fixtures.random_mlp(args.seed, sizes, args.gain)
        save_weights(out / "weights.json", {ly.name: ly.weights for ly in net.layers})
        net.save(out / "ann.json", weights_manifest="weights.json")
        print(f"wrote two-class blob dataset ({len(x)} samples) and a {sizes} network")
    else:
        x = fixtures.random_images(args.seed, args.n, tuple(args.image_shape))
        fixtures.save_dataset(out / "data", x)
        print(f"wrote {len(x)} random images")
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def _global_options(parser, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--dt", type=float, default=d(0.01), help="grid step in seconds")
    parser.add_argument("--t-window", type=float, default=d(3.0), help="window in seconds")
    parser.add_argument("--range-scale", type=float, default=d(None),
                        help="Hz per unit input (default 1 for neuron tools, 10 for networks)")
    parser.add_argument("--seed", type=int, default=d(0))
    parser.add_argument("--strict", action="store_true", default=d(False),
                        help="reject network inputs outside [0, 1] instead of clamping")
    parser.add_argument("--out-dir", default=d("."))
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _neuron_options(p):
    p.add_argument("--c-m", type=float, default=1.0)
    p.add_argument("--g-l", type=float, default=3.0)
    p.add_argument("--v-th", type=float, default=1.0)
    p.add_argument("--weights", type=float, nargs="+", default=[0.3, 0.2])


def build_parser():
    parser = argparse.ArgumentParser(prog="lifmap", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("neuron", parents=[common], help="simulate one neuron in both reset modes")
    _neuron_options(p)
    p.add_argument("--rates", type=float, nargs="+", default=[10.0, 10.0],
                   help="input values, scaled by --range-scale to Hz")
    p.add_argument("--v0", type=float, default=0.0)
    p.set_defaults(func=cmd_neuron)

    p = sub.add_parser("sweep", parents=[common], help="single-neuron parameter sweep")
    _neuron_options(p)
    p.add_argument("--axis", choices=["f_in", "g_l", "c_m", "range_scale", "t_window"],
                   default="f_in")
    p.add_argument("--values", type=float, nargs="+", default=list(range(1, 31)))
    p.add_argument("--f-grid", type=float, nargs="+", default=list(range(1, 31)),
                   help="input frequencies for non-f_in axes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("encode", parents=[common], help="rate-code one value")
    p.add_argument("value", type=float)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("map", parents=[common], help="ReLU <-> LIF parameter mapping")
    p.add_argument("direction", choices=["to-lif", "to-relu"])
    p.add_argument("--sum-w", type=float, required=True)
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--slope", type=float, default=1.0)
    p.add_argument("--c-m", type=float, default=1.0)
    p.add_argument("--g-l", type=float, default=0.0)
    p.add_argument("--v-th", type=float, default=1.0)
    p.add_argument("--finite-window", action="store_true")
    p.add_argument("--save", action="store_true")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("convert", parents=[common], help="ANN spec -> SNN spec")
    p.add_argument("--ann", required=True)
    p.add_argument("--mode", choices=["zero_bias", "bias_to_conductance"], default="zero_bias")
    p.add_argument("--g-l", type=float, default=0.0)
    p.add_argument("--v-th", type=float, default=1.0)
    p.add_argument("--reset-mode", default="linear")
    p.add_argument("--drop-bias", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("run", parents=[common], help="run a network over a dataset")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--batch-size", type=int, default=16)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", parents=[common], help="ANN vs SNN equivalence report")
    p.add_argument("--ann", required=True)
    p.add_argument("--snn", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=16)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("error-scan", parents=[common], help="quantization error vs window")
    p.add_argument("--t-windows", type=float, nargs="+", default=[1.0, 3.0, 10.0])
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--ann")
    p.add_argument("--snn")
    p.add_argument("--data")
    p.add_argument("--batch-size", type=int, default=16)
    p.set_defaults(func=cmd_error_scan)

    p = sub.add_parser("gen-fixture", parents=[common], help="write synthetic nets/datasets")
    p.add_argument("--kind", choices=["mlp", "convnet", "blobs", "images"], default="mlp")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--sizes", type=int, nargs="+", default=[64, 32, 10])
    p.add_argument("--image-shape", type=int, nargs=3, default=[8, 8, 1])
    p.add_argument("--filters", type=int, default=4)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--gain", type=float, default=fixtures.DEFAULT_GAIN)
    p.set_defaults(func=cmd_gen_fixture)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage, 0 on --help
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"lifmap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ManifestError) as exc:
        print(f"lifmap: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LifmapError, DomainError) as exc:
        print(f"lifmap: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
