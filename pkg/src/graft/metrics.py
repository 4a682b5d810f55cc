"""Efficiency analytics: exponential gain-curve fitting, fidelity and
data-utilization ratios, emissions estimation, and trace export.

The gain curve is E(x) = E0 + (H - E0) * (1 - exp(-lambda x / x_max)).
For a fixed lambda the model is linear in (E0, H), so fitting proceeds by
seeding lambda on a grid, solving the linear subproblem, then refining all
three parameters with Gauss-Newton.  No external solver is used so the
fit is bit-reproducible.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, asdict

import numpy as np

from .errors import DegenerateBaseline, FitFailed
from .harness import RunTrace

LAMBDA_GRID = (0.1, 0.5, 1.0, 2.0, 4.0, 8.0)
# Desk-scale CO2 proxy: energy charged per per-sample gradient evaluation.
DEFAULT_JOULES_PER_EVAL = 1e-3
DEFAULT_INTENSITY_KG_PER_KWH = 0.366  # German grid average


@dataclass(frozen=True)
class EfficiencyCurve:
    E0: float
    H: float
    lam: float
    x_max: float
    r_squared: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.E0 + (self.H - self.E0) * (1.0 - np.exp(-self.lam * x / self.x_max))


@dataclass(frozen=True)
class EmissionsEstimate:
    power_kw: float
    duration_h: float
    intensity_kg_per_kwh: float
    kg_co2: float
    proxy_gradient_evals: int = 0


def _r_squared(y, yhat) -> float:
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 0.0  # 0/0 convention for flat data
    return 1.0 - ss_res / ss_tot


def _linear_subfit(x, y, lam, x_max):
    # E(x) = E0 * e^{-lam x / x_max} + H * (1 - e^{-lam x / x_max})
    w = np.exp(-lam * x / x_max)
    A = np.column_stack([w, 1.0 - w])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(coef[1])


def fit_gain_curve(points) -> EfficiencyCurve:
    """Least-squares fit of (E0, H, lambda) with x_max = max x.

    Needs >= 4 points with non-negative, not-all-equal x.  Flat y data
    degenerates to E0 = H = mean(y) with r_squared = 0.
    """
    pts = sorted((float(x), float(y)) for x, y in points)
    if len(pts) < 4:
        raise ValueError("need at least 4 points")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.any(x < 0):
        raise ValueError("x values must be non-negative")
    if np.ptp(x) == 0.0:
        raise ValueError("x values must not all be equal")
    x_max = float(x.max())

    if np.ptp(y) == 0.0:
        return EfficiencyCurve(float(y[0]), float(y[0]), LAMBDA_GRID[0], x_max, 0.0)

    def residuals(p):
        e0, h, lam = p
        return e0 + (h - e0) * (1.0 - np.exp(-lam * x / x_max)) - y

    def jacobian(p):
        e0, h, lam = p
        w = np.exp(-lam * x / x_max)
        return np.column_stack([w, 1.0 - w, (h - e0) * (x / x_max) * w])

    best = None
    best_sse = math.inf
    for lam0 in LAMBDA_GRID:
        e0, h = _linear_subfit(x, y, lam0, x_max)
        p = np.array([e0, h, lam0])
        for _ in range(200):
            r = residuals(p)
            J = jacobian(p)
            try:
                step, *_ = np.linalg.lstsq(J, -r, rcond=None)
            except np.linalg.LinAlgError:
                break
            # Halve the step until the residual does not get worse.
            sse = float(r @ r)
            alpha = 1.0
            for _ in range(30):
                cand = p + alpha * step
                if cand[2] > 0 and float(residuals(cand) @ residuals(cand)) <= sse:
                    break
                alpha *= 0.5
            else:
                break
            p = p + alpha * step
            if float(np.linalg.norm(alpha * step)) < 1e-10:
                break
        sse = float(residuals(p) @ residuals(p))
        if p[2] > 0 and np.all(np.isfinite(p)) and sse < best_sse:
            best_sse = sse
            best = p
    if best is None:
        raise FitFailed("no seed produced a finite fit")
    yhat = best[0] + (best[1] - best[0]) * (1.0 - np.exp(-best[2] * x / x_max))
    return EfficiencyCurve(float(best[0]), float(best[1]), float(best[2]), x_max, _r_squared(y, yhat))


def fidelity_and_utilization(trace: RunTrace, full_trace: RunTrace) -> tuple[float, float]:
    """Accuracy ratios of a reduced run against its full-data baseline."""
    full_acc = full_trace.final_test_accuracy
    if not full_acc or math.isnan(full_acc):
        raise DegenerateBaseline("full-data accuracy is zero or undefined")
    phi = trace.final_test_accuracy / full_acc
    return phi, phi


def utilization_gain_reference(fraction: float) -> float:
    """Rule-of-thumb gain of the utilization ratio at subset fraction f.

    Large-scale runs empirically show the utilization ratio improving by
    roughly 0.25 (1 - f) / f when moving from random to volume-based
    selection.  Diagnostic only; nothing asserts it at desk scale.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    return 0.25 * (1.0 - fraction) / fraction


def emissions(power_kw: float, duration_h: float, intensity: float,
              proxy_gradient_evals: int = 0) -> EmissionsEstimate:
    """Closed-form emissions: power (kW) x duration (h) x intensity."""
    if power_kw < 0 or duration_h < 0 or intensity < 0:
        raise ValueError("emissions inputs must be non-negative")
    return EmissionsEstimate(power_kw, duration_h, intensity,
                             power_kw * duration_h * intensity, proxy_gradient_evals)


def emissions_integrated(samples, intensity: float,
                         proxy_gradient_evals: int = 0) -> EmissionsEstimate:
    """Integrated emissions from (power_watts, dt_seconds) samples.

    Watt-seconds convert to kWh via 1/3.6e6 (the common 1/3600 form
    presumes power already in kW).
    """
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    energy_ws = 0.0
    duration_s = 0.0
    for p_w, dt_s in samples:
        if p_w < 0 or dt_s < 0:
            raise ValueError("power and dt must be non-negative")
        energy_ws += p_w * dt_s
        duration_s += dt_s
    kwh = energy_ws / 3.6e6
    duration_h = duration_s / 3600.0
    power_kw = kwh / duration_h if duration_h > 0 else 0.0
    return EmissionsEstimate(power_kw, duration_h, intensity, kwh * intensity,
                             proxy_gradient_evals)


def proxy_emissions(gradient_evals: int,
                    joules_per_eval: float = DEFAULT_JOULES_PER_EVAL,
                    intensity: float = DEFAULT_INTENSITY_KG_PER_KWH) -> EmissionsEstimate:
    """Machine-independent CO2 proxy from the gradient-evaluation counter."""
    kwh = gradient_evals * joules_per_eval / 3.6e6
    return EmissionsEstimate(0.0, 0.0, intensity, kwh * intensity, gradient_evals)


def export_trace(trace: RunTrace, out_dir,
                 joules_per_eval: float = DEFAULT_JOULES_PER_EVAL,
                 intensity: float = DEFAULT_INTENSITY_KG_PER_KWH,
                 baseline_accuracy: float | None = None) -> dict:
    """Write trace.json, alignment.csv, class_hist.csv, efficiency.csv.

    Schemas (stable column order):
      alignment.csv:  iteration,batch,cosine
      class_hist.csv: epoch,class,count
      efficiency.csv: x,value  -- x is the cumulative kg CO2 proxy at each
        epoch end; value is test accuracy, divided by ``baseline_accuracy``
        when one is supplied.
    Returns a {name: path} map of written files.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    p = os.path.join(out_dir, "trace.json")
    with open(p, "w") as fh:
        json.dump(trace.to_dict(), fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")
    paths["trace.json"] = p

    p = os.path.join(out_dir, "alignment.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "batch", "cosine"])
        for t, b, _r, _e, _s, cos in trace.refreshes:
            w.writerow([t, b, repr(float(cos))])
    paths["alignment.csv"] = p

    p = os.path.join(out_dir, "class_hist.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "class", "count"])
        for epoch, _loss, _acc, hist in trace.epochs:
            for c, cnt in enumerate(hist):
                w.writerow([epoch, c, cnt])
    paths["class_hist.csv"] = p

    p = os.path.join(out_dir, "efficiency.csv")
    evals_at_epoch = _cumulative_evals_per_epoch(trace)
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for (epoch, _loss, acc, _h), evals in zip(trace.epochs, evals_at_epoch):
            kg = proxy_emissions(evals, joules_per_eval, intensity).kg_co2
            val = acc / baseline_accuracy if baseline_accuracy else acc
            w.writerow([repr(float(kg)), repr(float(val))])
    paths["efficiency.csv"] = p
    return paths


def _cumulative_evals_per_epoch(trace: RunTrace) -> list[int]:
    if not trace.epochs or not trace.iterations:
        return [0] * len(trace.epochs)
    out = []
    by_iter = {t: evals for t, _l, _s, evals in trace.iterations}
    last_t = trace.iterations[-1][0]
    # epoch boundaries were recorded at multiples of B (or the final t)
    boundaries = sorted(by_iter)
    n_epochs = len(trace.epochs)
    per = max(1, last_t // n_epochs)
    for e in range(1, n_epochs + 1):
        t = min(e * per, last_t)
        out.append(by_iter[t])
    return out


def load_trace(path) -> RunTrace:
    with open(path) as fh:
        return RunTrace.from_dict(json.load(fh))
