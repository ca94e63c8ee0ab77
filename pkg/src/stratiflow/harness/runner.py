"""Time integration driver with reports, trackers, checkpoints and a ledger."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dynamics import BlowupError, StateVector, rhs_arrays, rk4_arrays
from ..energy import EnergyReport, compute_frak_e, energy_report, weight_min
from ..linear_oracle import (
    QuasilinearPropagator,
    WeightFunction,
    decay_envelope_check,
    quasilinear_energy,
)
from ..spectral_ops import sobolev_norm, split_mean
from .config import RunConfig
from .initial import generate_initial_data
from .io import (
    Checkpoint,
    blob_hash,
    checkpoint_bytes,
    csv_line,
    load_checkpoint,
    sidecar_text,
)

CSV_NAME = "run.csv"
JSON_NAME = "run.json"
FINAL_CHECKPOINT = "checkpoint_final.stra"

TRACKER_COLUMNS = ["u_H4", "envelope", "frakE_kappa_ratio", "rho_tilde_norm", "gronwall_integral",
                   "gronwall_bound", "quasilinear_Q"]
COLUMNS = ["step"] + EnergyReport.field_names() + TRACKER_COLUMNS

# relative slack allowed when testing a sampled sequence for monotone decrease
MONOTONE_RTOL = 1e-12
# thresholds of the run ledger, in units of epsilon or epsilon^2
BOOTSTRAP_ENERGY = 3.0
BOOTSTRAP_DECAY = 10.0
MEAN_PROFILE = 6.0
GRONWALL_TRIGGER = 6.0
BOUNDARY_TRACE = 1e-10
ENVELOPE_ALPHA = 2


def checkpoint_name(step: int) -> str:
    return f"checkpoint_{step:08d}.stra"


def _ratio(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0
    return a / b if b else float("inf")


def fit_decay(times, values, gamma: float, epsilon: float = 1.0):
    """Envelope ``sup v (1+t)^(gamma/4) / epsilon`` and the tail log-log slope.

    Needs at least 20 samples whose ``1 + t`` spans a decade; the slope is a
    least-squares fit over the second half of the samples.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("times and values must be 1-d of equal length")
    if t.size < 20:
        raise ValueError(f"need at least 20 samples, got {t.size}")
    if np.any(t < 0) or (1.0 + t.max()) < 10.0 * (1.0 + t.min()):
        raise ValueError("samples must span a decade in 1 + t")
    envelope = float(np.max(v * (1.0 + t) ** (gamma / 4.0)) / epsilon)
    tail = slice(t.size // 2, None)
    vt = v[tail]
    if np.any(vt <= 0):
        raise ValueError("tail values must be positive for a log-log fit")
    slope = float(np.polyfit(np.log1p(t[tail]), np.log(vt), 1)[0])
    return envelope, slope


@dataclass
class RunResult:
    cfg: RunConfig
    rows: list
    final: Checkpoint
    ledger: dict
    extrema: dict
    out_dir: Path | None = None
    halted: str | None = None
    files: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    @property
    def ok(self) -> bool:
        return self.halted is None


class _Stepper:
    def __init__(self, cfg: RunConfig, state: StateVector):
        self.cfg = cfg
        self.weight = None
        if cfg.mode == "quasilinear":
            mean, _ = split_mean(state.rho)
            self.weight = WeightFunction.from_mean(mean, cfg.k_energy, cfg.weight_epsilon)
            self._prop = QuasilinearPropagator(self.weight, cfg.m, cfg.dt)
        else:
            nl = cfg.mode == "nonlinear"
            self._f = lambda r, a, b: rhs_arrays(r, a, b, nl)

    def __call__(self, s: StateVector, t_new: float) -> StateVector:
        if self.weight is not None:
            out = self._prop.step(s)
            arrays = out.arrays()
        else:
            arrays = rk4_arrays(s.arrays(), self.cfg.dt, self._f)
        if not all(np.all(np.isfinite(c)) for c in arrays):
            raise BlowupError("non-finite coefficients", t_new, {"t_start": s.t, "max_abs_before": s.max_abs()})
        return StateVector.from_arrays(arrays, t_new)


class _Trackers:
    """Running extrema; stored verbatim in checkpoints."""

    NAMES = ("envelope_sup", "frakE_ratio_max", "rho_tilde_max", "psi1_max", "psi2_max",
             "gronwall_integral", "u_H4_prev", "frakE0", "boundary_trace_sup", "weight_min_min",
             "blowup_max", "ql_prev", "ql_increase_max", "ql_E_alpha0")

    def __init__(self, values: dict | None = None):
        self.v = {n: 0.0 for n in self.NAMES}
        self.v["weight_min_min"] = float("inf")
        self.v["ql_prev"] = float("nan")
        if values:
            unknown = set(values) - set(self.NAMES)
            if unknown:
                raise ValueError(f"unknown extrema in checkpoint: {sorted(unknown)}")
            self.v.update(values)

    def __getitem__(self, k):
        return self.v[k]

    def __setitem__(self, k, x):
        self.v[k] = float(x)

    def bump(self, k, x):
        if x > self.v[k] or np.isnan(x):
            self.v[k] = float(x)

    def lower(self, k, x):
        if x < self.v[k] or np.isnan(x):
            self.v[k] = float(x)


def _u_h4(s: StateVector) -> float:
    return sobolev_norm(s.velocity, 4)


def _rho_tilde_norm(s: StateVector, order: int) -> float:
    mean, _ = split_mean(s.rho)
    return sobolev_norm(mean.as_field(s.m), order)


class Runner:
    """Drives one trajectory; ``run`` and ``resume`` are thin wrappers."""

    def __init__(self, cfg: RunConfig, out_dir: str | Path | None = None):
        self.cfg = cfg
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.eps = cfg.epsilon
        self.nonlinear = cfg.mode == "nonlinear"

    # -- reports ---------------------------------------------------------
    def _report(self, s: StateVector, step: int, tr: _Trackers, stepper: _Stepper) -> dict:
        cfg = self.cfg
        rep = energy_report(s, cfg.k_energy, self.nonlinear)
        frak = compute_frak_e(s, cfg.kappa, self.nonlinear)
        u4 = tr["u_H4_prev"]
        row = {"step": step, **rep.as_dict()}
        row["u_H4"] = u4
        row["envelope"] = _ratio(u4 * (1.0 + s.t) ** (cfg.gamma / 4.0), self.eps)
        row["frakE_kappa_ratio"] = _ratio(frak, self.eps ** 2)
        row["rho_tilde_norm"] = _rho_tilde_norm(s, cfg.kappa + 1)
        row["gronwall_integral"] = tr["gronwall_integral"]
        row["gronwall_bound"] = tr["frakE0"] * np.exp(tr["gronwall_integral"])
        if stepper.weight is not None:
            q = quasilinear_energy(s, stepper.weight, cfg.k_energy)
            prev = tr["ql_prev"]
            if not np.isnan(prev):
                tr.bump("ql_increase_max", (q - prev) / prev if prev > 0 else q - prev)
            tr["ql_prev"] = q
            row["quasilinear_Q"] = q
        else:
            row["quasilinear_Q"] = 0.0
        tr.bump("frakE_ratio_max", row["frakE_kappa_ratio"])
        tr.bump("rho_tilde_max", _ratio(row["rho_tilde_norm"], self.eps ** 2))
        tr.bump("psi1_max", rep.psi1)
        tr.bump("psi2_max", rep.psi2)
        tr.bump("boundary_trace_sup", rep.boundary_trace_max)
        tr.lower("weight_min_min", rep.weight_min)
        tr.bump("blowup_max", rep.blowup_integrand)
        if not (rep.blowup_integrand <= cfg.blowup_cap):
            raise BlowupError(f"blow-up integrand {rep.blowup_integrand:.3g} exceeds cap {cfg.blowup_cap:.3g}",
                              s.t, {"step": step, "blowup_integrand": rep.blowup_integrand})
        return row

    # -- main loop -------------------------------------------------------
    def execute(self, state: StateVector, start_step: int = 0, extrema: dict | None = None,
                prior_lines: list | None = None) -> RunResult:
        cfg = self.cfg
        n_steps = cfg.n_steps
        if start_step > n_steps:
            raise ValueError("checkpoint lies beyond t_end")
        stepper = _Stepper(cfg, state)
        tr = _Trackers(extrema)
        rows, lines = [], list(prior_lines or [])
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        s = state
        if extrema is None:
            s = s.with_time(0.0)
            wmin = weight_min(s)
            if not wmin > 0.0:
                raise ValueError(f"initial weight minimum {wmin:.3g} is not positive; lower epsilon")
            tr["frakE0"] = compute_frak_e(s, cfg.kappa, self.nonlinear)
            tr["u_H4_prev"] = _u_h4(s)
            tr["envelope_sup"] = _ratio(tr["u_H4_prev"], self.eps)
            if stepper.weight is not None:
                tr["ql_E_alpha0"] = quasilinear_energy(s, stepper.weight, cfg.k_energy + ENVELOPE_ALPHA)
        halted = None
        step = start_step
        try:
            if extrema is None:
                row = self._report(s, 0, tr, stepper)
                rows.append(row)
                lines.append(csv_line(row, COLUMNS))
            while step < n_steps:
                step += 1
                t_new = step * cfg.dt
                s = stepper(s, t_new)
                u4 = _u_h4(s)
                tr["gronwall_integral"] = tr["gronwall_integral"] + 0.5 * cfg.dt * (tr["u_H4_prev"] + u4)
                tr["u_H4_prev"] = u4
                tr.bump("envelope_sup", _ratio(u4 * (1.0 + t_new) ** (cfg.gamma / 4.0), self.eps))
                if step % cfg.output_every == 0 or step == n_steps:
                    row = self._report(s, step, tr, stepper)
                    rows.append(row)
                    lines.append(csv_line(row, COLUMNS))
                if cfg.checkpoint_every and step % cfg.checkpoint_every == 0 and step < n_steps:
                    self._write_checkpoint(checkpoint_name(step), Checkpoint(cfg, step, s, dict(tr.v)), lines)
        except BlowupError as exc:
            halted = f"{exc} at t={exc.t:.6g}"
        final = Checkpoint(cfg, step, s, dict(tr.v))
        ledger = build_ledger(cfg, tr, stepper, lines, halted)
        result = RunResult(cfg, rows, final, ledger, dict(tr.v), self.out_dir, halted)
        if self.out_dir is not None:
            self._write_outputs(result, lines)
        return result

    def _write_checkpoint(self, name: str, ck: Checkpoint, lines):
        if self.out_dir is None:
            return
        (self.out_dir / name).write_bytes(checkpoint_bytes(ck))
        # keep the CSV current so an interrupted run can be resumed
        (self.out_dir / CSV_NAME).write_text(_csv_text(lines))

    def _write_outputs(self, result: RunResult, lines):
        csv_bytes = _csv_text(lines).encode()
        ck_bytes = checkpoint_bytes(result.final)
        (self.out_dir / CSV_NAME).write_bytes(csv_bytes)
        (self.out_dir / FINAL_CHECKPOINT).write_bytes(ck_bytes)
        payload = {
            "cfg": result.cfg.to_dict(),
            "csv": {"file": CSV_NAME, "sha1": blob_hash(csv_bytes), "rows": len(lines)},
            "checkpoint": {"file": FINAL_CHECKPOINT, "sha1": blob_hash(ck_bytes), "step": result.final.step},
            "extrema": result.extrema,
            "ledger": result.ledger,
            "halted": result.halted,
        }
        (self.out_dir / JSON_NAME).write_text(sidecar_text(payload))
        result.files = {"csv": self.out_dir / CSV_NAME, "checkpoint": self.out_dir / FINAL_CHECKPOINT,
                        "json": self.out_dir / JSON_NAME}


def _csv_text(lines) -> str:
    return ",".join(COLUMNS) + "\n" + "".join(lines)


def _entry(value, threshold, passed, applicable=True, note=None):
    e = {"value": value, "threshold": threshold, "pass": bool(passed) if applicable else None,
         "applicable": applicable}
    if note:
        e["note"] = note
    return e


def build_ledger(cfg: RunConfig, tr: _Trackers, stepper: _Stepper, lines, halted) -> dict:
    ok = halted is None
    quasi = cfg.mode == "quasilinear"
    led = {}
    led["completed"] = _entry(halted or "ok", None, ok)
    led["hypotheses"] = _entry({"gamma": cfg.gamma, "kappa": cfg.kappa}, "gamma > 4, kappa >= 6 + 2 gamma",
                               cfg.bootstrap_hypotheses)
    boot = cfg.mode == "nonlinear"
    led["bootstrap_energy"] = _entry(tr["frakE_ratio_max"], BOOTSTRAP_ENERGY,
                                     ok and tr["frakE_ratio_max"] <= BOOTSTRAP_ENERGY, boot)
    led["bootstrap_decay"] = _entry(tr["envelope_sup"], BOOTSTRAP_DECAY,
                                    ok and tr["envelope_sup"] <= BOOTSTRAP_DECAY, boot)
    led["mean_profile_bound"] = _entry(tr["rho_tilde_max"], MEAN_PROFILE,
                                       ok and tr["rho_tilde_max"] <= MEAN_PROFILE, boot)
    led["boundary_traces"] = _entry(tr["boundary_trace_sup"], BOUNDARY_TRACE,
                                    tr["boundary_trace_sup"] < BOUNDARY_TRACE)
    bound = _ratio(float(tr["frakE0"] * np.exp(tr["gronwall_integral"])), cfg.epsilon ** 2)
    triggered = tr["frakE_ratio_max"] <= GRONWALL_TRIGGER
    led["gronwall"] = _entry(bound, BOOTSTRAP_ENERGY, ok and (not triggered or bound <= BOOTSTRAP_ENERGY), boot,
                             note=None if triggered else "energy exceeded the trigger; bound not required")
    led["weight_positive"] = _entry(tr["weight_min_min"], 0.0, tr["weight_min_min"] > 0.0)
    if quasi:
        w = stepper.weight
        led["weight_hypothesis"] = _entry(w.bound(), w.epsilon, w.satisfied())
        led["quasilinear_monotone"] = _entry(tr["ql_increase_max"], MONOTONE_RTOL,
                                             ok and tr["ql_increase_max"] <= MONOTONE_RTOL)
        led["quasilinear_envelope"] = _quasilinear_envelope(cfg, tr, lines)
    else:
        for name in ("weight_hypothesis", "quasilinear_monotone", "quasilinear_envelope"):
            led[name] = _entry(None, None, False, applicable=False)
    return led


def _quasilinear_envelope(cfg: RunConfig, tr: _Trackers, lines) -> dict:
    it, iq = COLUMNS.index("t"), COLUMNS.index("quasilinear_Q")
    vals = [ln.split(",") for ln in lines]
    t = [float(v[it]) for v in vals]
    q = [float(v[iq]) for v in vals]
    try:
        c = decay_envelope_check(q, t, tr["ql_E_alpha0"], ENVELOPE_ALPHA)
    except ValueError as exc:
        return _entry(None, None, False, note=str(exc))
    return _entry(c, "finite", bool(np.isfinite(c)))


# ---------------------------------------------------------------------------
# public entry points


def run(cfg: RunConfig, out_dir: str | Path | None = None, state: StateVector | None = None) -> RunResult:
    """Integrate from generated (or supplied) initial data."""
    if state is None:
        state = generate_initial_data(cfg)
    elif state.m != cfg.m:
        raise ValueError("initial state truncation differs from cfg.m")
    return Runner(cfg, out_dir).execute(state)


def resume(checkpoint_path: str | Path, out_dir: str | Path | None = None) -> RunResult:
    """Continue a run from a checkpoint.

    Report lines up to the checkpoint step are copied verbatim from the CSV
    next to the checkpoint, so the finished files match an uninterrupted run.
    """
    checkpoint_path = Path(checkpoint_path)
    ck = load_checkpoint(checkpoint_path)
    src_csv = checkpoint_path.parent / CSV_NAME
    prior = []
    if src_csv.exists():
        text = src_csv.read_text().splitlines(keepends=True)
        if text and text[0].strip() != ",".join(COLUMNS):
            raise ValueError(f"{src_csv} has an unexpected header")
        for ln in text[1:]:
            if int(ln.split(",", 1)[0]) <= ck.step:
                prior.append(ln)
    elif ck.step > 0:
        raise FileNotFoundError(f"{src_csv} is needed to resume from step {ck.step}")
    out = Path(out_dir) if out_dir is not None else checkpoint_path.parent
    return Runner(ck.cfg, out).execute(ck.state, ck.step, ck.extrema, prior)
