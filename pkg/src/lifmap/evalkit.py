"""Equivalence metrics between spiking and ReLU networks."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, ShapeError, UndefinedCorrelationError

STRONG_CORRELATION = 0.8


def correlation(x, y) -> float:
    """Pearson coefficient, computed with centred two-pass sums."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ShapeError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise DomainError("correlation needs at least two samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("zero variance series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def _corr_matrix(rows):
    """Correlation matrix between the rows of ``rows`` (all non-constant)."""
    n = len(rows)
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = correlation(rows[i], rows[j])
    return out


@dataclass
class CorrelationMatrices:
    """Block matrices ``[[snn-snn, snn-ann], [ann-snn, ann-ann]]``.

    ``data`` compares per-datum output vectors, ``neuron`` compares each
    neuron's response profile across data. Constant rows are dropped and
    their indices reported.
    """

    data: np.ndarray
    neuron: np.ndarray
    data_kept: list
    neuron_kept: list
    excluded_data: list
    excluded_neurons: list

    def cross_block(self, which="data"):
        m = self.data if which == "data" else self.neuron
        n = m.shape[0] // 2
        return m[:n, n:]

    def cross_diagonal_mean(self, which="data"):
        return float(np.mean(np.diag(self.cross_block(which))))

    def cross_offdiagonal_mean(self, which="data"):
        blk = self.cross_block(which)
        n = blk.shape[0]
        if n < 2:
            return float("nan")
        return float(blk[~np.eye(n, dtype=bool)].mean())


def correlation_matrices(snn_outputs, ann_outputs) -> CorrelationMatrices:
    s = np.asarray(snn_outputs, dtype=np.float64)
    a = np.asarray(ann_outputs, dtype=np.float64)
    if s.shape != a.shape or s.ndim != 2:
        raise ShapeError(f"expected matching (data, neuron) matrices, got {s.shape} and {a.shape}")

    def flat(m):
        return np.ptp(m, axis=1) == 0

    bad_data = flat(s) | flat(a)
    bad_neuron = flat(s.T) | flat(a.T)
    keep_d = np.flatnonzero(~bad_data)
    keep_n = np.flatnonzero(~bad_neuron)
    data_rows = np.concatenate([s[keep_d], a[keep_d]])
    neuron_rows = np.concatenate([s.T[keep_n], a.T[keep_n]])
    return CorrelationMatrices(
        data=_corr_matrix(data_rows), neuron=_corr_matrix(neuron_rows),
        data_kept=keep_d.tolist(), neuron_kept=keep_n.tolist(),
        excluded_data=np.flatnonzero(bad_data).tolist(),
        excluded_neurons=np.flatnonzero(bad_neuron).tolist())


def confusion_matrix(reference_labels, predicted_labels, n_classes) -> np.ndarray:
    ref = np.asarray(reference_labels, dtype=np.int64)
    pred = np.asarray(predicted_labels, dtype=np.int64)
    if ref.shape != pred.shape:
        raise ShapeError("label lists differ in length")
    for lab in (ref, pred):
        if lab.size and (lab.min() < 0 or lab.max() >= n_classes):
            raise DomainError(f"labels must lie in [0, {n_classes})")
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (ref, pred), 1)
    return m


def agreement(cm) -> float:
    cm = np.asarray(cm)
    total = cm.sum()
    return float(np.trace(cm) / total) if total else float("nan")


def quantization_bound(t_window: float) -> float:
    if not t_window > 0:
        raise DomainError(f"t_window must be > 0, got {t_window}")
    return 1.0 / t_window


@dataclass
class ErrorReport:
    errors: np.ndarray
    bound: float
    violations: list

    @property
    def median(self):
        return float(np.median(self.errors)) if self.errors.size else 0.0

    @property
    def max(self):
        return float(self.errors.max()) if self.errors.size else 0.0


def error_report(expected_rates, decoded_rates, t_window) -> ErrorReport:
    f = np.asarray(expected_rates, dtype=np.float64)
    fp = np.asarray(decoded_rates, dtype=np.float64)
    if f.shape != fp.shape:
        raise ShapeError("expected and decoded rates differ in shape")
    err = np.abs(f - fp)
    bound = quantization_bound(t_window)
    return ErrorReport(err, bound, np.flatnonzero(err >= bound).tolist())


@dataclass
class EquivalenceReport:
    t_window: float
    correlation_mean: float
    correlation_min: float
    correlation_max: float
    layer_correlations: list
    label_agreement: float
    confusion: list
    rate_error_quantiles: dict
    quantization_bound: float
    excluded_data: list = field(default_factory=list)
    excluded_neurons: list = field(default_factory=list)
    strong_threshold: float = STRONG_CORRELATION
    data_matrix: np.ndarray | None = None
    neuron_matrix: np.ndarray | None = None

    def to_json(self):
        d = asdict(self)
        d.pop("data_matrix")
        d.pop("neuron_matrix")
        return json.dumps(_jsonable(d), indent=2, sort_keys=True) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) else x
    return x


def per_datum_correlations(snn_out, ann_out):
    """Correlation of each datum's SNN vs ANN vector; constant pairs skipped."""
    vals, skipped = [], []
    for i, (s, a) in enumerate(zip(snn_out, ann_out)):
        try:
            vals.append(correlation(s, a))
        except UndefinedCorrelationError:
            skipped.append(i)
    return np.array(vals), skipped


def compare(ann_result, snn_result, t_window, layer=0, n_classes=None) -> EquivalenceReport:
    """Build an :class:`EquivalenceReport` from matching ANN and SNN runs.

    ``layer`` selects the layer used for the correlation matrices (the first
    hidden layer by default, as in the classic hidden-layer comparison).
    """
    layer_corrs = []
    for s, a in zip(snn_result.layer_outputs, ann_result.layer_outputs):
        s2 = s.reshape(len(s), -1)
        a2 = a.reshape(len(a), -1)
        c, _ = per_datum_correlations(s2, a2)
        layer_corrs.append(float(c.mean()) if c.size else float("nan"))
    s = snn_result.layer_outputs[layer].reshape(len(snn_result.labels), -1)
    a = ann_result.layer_outputs[layer].reshape(len(ann_result.labels), -1)
    corrs, _ = per_datum_correlations(s, a)
    mats = correlation_matrices(s, a) if len(s) >= 2 else None
    if n_classes is None:
        n_classes = int(np.prod(ann_result.output.shape[1:]))
    cm = confusion_matrix(ann_result.labels, snn_result.labels, n_classes)
    err = np.abs(np.concatenate([
        (so - ao).ravel() for so, ao in zip(snn_result.layer_outputs, ann_result.layer_outputs)]))
    q = {str(p): float(np.quantile(err, p)) for p in (0.5, 0.9, 0.99, 1.0)} if err.size else {}
    return EquivalenceReport(
        t_window=t_window,
        correlation_mean=float(corrs.mean()) if corrs.size else float("nan"),
        correlation_min=float(corrs.min()) if corrs.size else float("nan"),
        correlation_max=float(corrs.max()) if corrs.size else float("nan"),
        layer_correlations=layer_corrs,
        label_agreement=agreement(cm),
        confusion=cm.tolist(),
        rate_error_quantiles=q,
        quantization_bound=quantization_bound(t_window),
        excluded_data=mats.excluded_data if mats else [],
        excluded_neurons=mats.excluded_neurons if mats else [],
        data_matrix=mats.data if mats else None,
        neuron_matrix=mats.neuron if mats else None)


def matrix_csv(m) -> str:
    """Row-major CSV with a header row of column indices."""
    m = np.asarray(m)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(range(m.shape[1]))
    for row in m:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
