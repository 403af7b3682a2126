"""System-identification experiment driver and reference oracles.

A trial generates a quantized plant, an input stream, and output noise
scaled to the requested SNR; the configured filter then adapts against the
noisy desired signal.  Ensemble statistics are accumulated as exact integer
sums of squared mantissas, so curves are deterministic and independent of
trial ordering.  ``reference_lms`` is the direct multiply-accumulate twin of
the DA filter: same quantization contract, no lookup tables.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.signal import lfilter

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .da_core import DaFilterState, step_m
from .fixed_point import Fx, fit_mantissa, fx_range, quantize
from .variants import BlmsState, DlmsState, blms_step_m, dlms_step_m


class ConfigError(ValueError):
    """Raised when an experiment configuration is unusable."""


SCHEMES = ("tc", "obc")
VARIANTS = ("lms", "dlms", "blms")
INPUT_MODELS = ("white", "ar1")


@dataclass
class ExperimentConfig:
    n_taps: int
    coeff_bits: int
    iterations: int
    scheme: str = "tc"
    lut_k: Optional[int] = None
    bank_policy: str = "slide"
    rounding: str = "nearest"
    mu_exp: Optional[int] = None
    mu_value: Optional[float] = None
    mu_wl: int = 16
    mu_fl: int = 15
    x_wl: int = 12
    x_fl: int = 11
    y_wl: Optional[int] = None
    y_fl: Optional[int] = None
    e_wl: Optional[int] = None
    e_fl: Optional[int] = None
    variant: str = "lms"
    delay: int = 0
    block: int = 1
    input_model: str = "white"
    input_std: float = 0.3
    ar_rho: float = 0.9
    snr_db: float = math.inf
    ensemble: int = 1
    seed: int = 0
    plant: str = "random"

    def __post_init__(self) -> None:
        if self.y_wl is None:
            self.y_wl = self.x_wl + max(1, math.ceil(math.log2(self.n_taps))) + 2
        if self.y_fl is None:
            self.y_fl = self.x_fl
        if self.e_wl is None:
            self.e_wl = self.y_wl
        if self.e_fl is None:
            self.e_fl = self.y_fl

    def validate(self) -> None:
        if self.n_taps < 1:
            raise ConfigError("n_taps must be >= 1")
        if self.coeff_bits < 2:
            raise ConfigError("coeff_bits must be >= 2")
        if self.iterations < 1 or self.ensemble < 1:
            raise ConfigError("iterations and ensemble must be >= 1")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.input_model not in INPUT_MODELS:
            raise ConfigError(f"input_model must be one of {INPUT_MODELS}")
        if self.lut_k is not None and not 1 <= self.lut_k <= self.n_taps:
            raise ConfigError("lut_k must lie in [1, n_taps]")
        if self.variant == "blms" and self.iterations % self.block != 0:
            raise ConfigError("iterations must be a multiple of the block length")
        if self.variant == "dlms" and self.delay < 0:
            raise ConfigError("delay must be >= 0")
        if not self.input_std > 0:
            raise ConfigError("input_std must be > 0")
        if self.input_model == "ar1" and not -1 < self.ar_rho < 1:
            raise ConfigError("ar_rho must lie in (-1, 1)")
        if math.isnan(self.snr_db):
            raise ConfigError("snr_db must be a number or inf")
        self.resolve_mu()  # raises on unrepresentable step size

    def resolve_mu(self) -> Fx:
        if (self.mu_exp is None) == (self.mu_value is None):
            raise ConfigError("specify exactly one of mu_exp and mu_value")
        if self.mu_exp is not None:
            if self.mu_exp < 0:
                raise ConfigError("mu_exp must be >= 0")
            return Fx(1, max(2, self.mu_exp + 1), self.mu_exp)
        mu = quantize(self.mu_value, self.mu_wl, self.mu_fl, self.rounding)
        if mu.mantissa == 0:
            raise ConfigError(
                f"step size {self.mu_value} quantizes to zero in "
                f"({self.mu_wl}, {self.mu_fl})"
            )
        return mu

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        with open(path, "rb") as f:
            raw = tomllib.load(f)
        flt = raw.get("filter", {})
        fmts = raw.get("formats", {})
        var = raw.get("variant", {})
        exp = raw.get("experiment", {})
        known_sections = {"filter", "formats", "variant", "experiment"}
        unknown = set(raw) - known_sections
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for section, names in (
            (flt, ("n_taps", "coeff_bits", "scheme", "lut_k", "bank_policy",
                   "rounding", "mu_exp", "mu_value", "mu_wl", "mu_fl")),
            (fmts, ("x_wl", "x_fl", "y_wl", "y_fl", "e_wl", "e_fl")),
            (var, ("delay", "block")),
            (exp, ("input_model", "input_std", "ar_rho", "snr_db",
                   "iterations", "ensemble", "seed", "plant")),
        ):
            for name in names:
                if name in section:
                    kwargs[name] = section[name]
            extra = set(section) - set(names) - {"kind"}
            if extra:
                raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "kind" in var:
            kwargs["variant"] = var["kind"]
        missing = {"n_taps", "coeff_bits", "iterations"} - set(kwargs)
        if missing:
            raise ConfigError(f"missing required config keys: {sorted(missing)}")
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


def quantize_stream(values: np.ndarray, wl: int, fl: int) -> np.ndarray:
    """Vector round-half-away-from-zero to (wl, fl) mantissas with saturation."""
    scale = float(1 << fl)
    v = np.asarray(values, dtype=np.float64) * scale
    m = np.where(v >= 0, np.floor(v + 0.5), -np.floor(-v + 0.5))
    lo, hi = fx_range(wl)
    return np.clip(m, lo, hi).astype(np.int64)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based per-trial substream; independent of trial ordering."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,)))
    )


@dataclass
class TrialData:
    x_m: np.ndarray  # input mantissas, x format
    d_m: np.ndarray  # desired mantissas, y format (plant output + noise)
    plant_m: list[int]  # plant coefficient mantissas, (B, B-1)
    noise: np.ndarray  # the injected noise samples (real-valued)
    clean_power: float  # mean square of the noiseless plant output
    sigma_z: float


def _plant_mantissas(config: ExperimentConfig, rng: np.random.Generator) -> list[int]:
    b = config.coeff_bits
    if config.plant == "random":
        hi = 1.0 - 2.0 ** -(b - 1)
        vals = rng.uniform(-1.0, hi, size=config.n_taps)
    else:
        vals = np.loadtxt(config.plant, dtype=np.float64, ndmin=1)
        if vals.shape != (config.n_taps,):
            raise ConfigError(
                f"plant file holds {vals.size} coefficients, expected {config.n_taps}"
            )
    return quantize_stream(vals, b, b - 1).tolist()


def generate_trial(config: ExperimentConfig, trial: int) -> TrialData:
    """Plant, input stream and noisy desired signal for one trial.

    Draw order is fixed (plant, input, noise) so substreams are stable; the
    noise gain is set from the measured clean-output power, which keeps the
    realized SNR within sampling error of the request.
    """
    rng = trial_rng(config.seed, trial)
    plant_m = _plant_mantissas(config, rng)
    g = rng.standard_normal(config.iterations)
    if config.input_model == "white":
        x = g * config.input_std
    else:
        ar = lfilter([1.0], [1.0, -config.ar_rho], g)
        x = ar * (config.input_std * math.sqrt(1.0 - config.ar_rho**2))
    z_raw = rng.standard_normal(config.iterations)

    x_m = quantize_stream(x, config.x_wl, config.x_fl)
    clean_scale = 2.0 ** -(config.coeff_bits - 1 + config.x_fl)
    bound = (
        config.n_taps
        * (1 << (config.coeff_bits - 1))
        * (1 << (config.x_wl - 1))
    )
    if bound < 1 << 62:
        clean_int = np.convolve(x_m, np.asarray(plant_m, dtype=np.int64))
        clean = clean_int[: config.iterations].astype(np.float64) * clean_scale
    else:
        xs = x_m.tolist()
        clean_list = []
        for t in range(config.iterations):
            acc = 0
            for i, pm in enumerate(plant_m):
                if t - i >= 0:
                    acc += pm * xs[t - i]
            clean_list.append(acc)
        clean = np.asarray(clean_list, dtype=np.float64) * clean_scale

    clean_power = float(np.mean(clean * clean))
    if math.isinf(config.snr_db) or clean_power == 0.0:
        sigma_z = 0.0
    else:
        sigma_z = math.sqrt(clean_power * 10.0 ** (-config.snr_db / 10.0))
    noise = z_raw * sigma_z
    d_m = quantize_stream(clean + noise, config.y_wl, config.y_fl)
    return TrialData(x_m, d_m, plant_m, noise, clean_power, sigma_z)


def make_filter(
    config: ExperimentConfig,
) -> Union[DaFilterState, DlmsState, BlmsState]:
    mu = config.resolve_mu()
    state = DaFilterState.create(
        config.n_taps,
        config.coeff_bits,
        x_format=(config.x_wl, config.x_fl),
        y_format=(config.y_wl, config.y_fl),
        e_format=(config.e_wl, config.e_fl),
        mu=mu,
        scheme=config.scheme,
        lut_k=config.lut_k,
        bank_policy=config.bank_policy,
        rounding=config.rounding,
    )
    if config.variant == "dlms":
        return DlmsState(state, config.delay)
    if config.variant == "blms":
        return BlmsState(state, config.block)
    return state


@dataclass
class LearningCurve:
    mse: np.ndarray
    mse_db: np.ndarray
    coef_err: np.ndarray
    coef_err_db: np.ndarray

    def __len__(self) -> int:
        return len(self.mse)

    def write_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w") as f:
            f.write("iter,mse,mse_db,coef_err,coef_err_db\n")
            for t in range(len(self.mse)):
                f.write(
                    f"{t},{float(self.mse[t])!r},{float(self.mse_db[t])!r},"
                    f"{float(self.coef_err[t])!r},{float(self.coef_err_db[t])!r}\n"
                )


@dataclass
class RunResult:
    curve: LearningCurve
    final_states: list


def _db(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(values)


def run(
    config: ExperimentConfig, trials: Optional[Iterable[int]] = None
) -> RunResult:
    """Drive the configured filter over the ensemble; average exactly.

    Squared-error and coefficient-error sums are exact integers in the
    mantissa domain, converted to floats once at the end, so the result is
    byte-reproducible and trial-order independent.
    """
    config.validate()
    if trials is None:
        trials = range(config.ensemble)
    trials = list(trials)
    iters = config.iterations
    n = config.n_taps
    se_sums = [0] * iters
    ce_sums = [0] * iters
    final_states = []
    for trial in trials:
        data = generate_trial(config, trial)
        filt = make_filter(config)
        inner = filt.inner if isinstance(filt, (DlmsState, BlmsState)) else filt
        xs = data.x_m.tolist()
        ds = data.d_m.tolist()
        plant = data.plant_m
        coeff = inner.coeff_m
        if isinstance(filt, BlmsState):
            l = config.block
            for t0 in range(0, iters, l):
                ce = 0
                for i in range(n):
                    diff = plant[i] - coeff[i]
                    ce += diff * diff
                _, es = blms_step_m(filt, xs[t0 : t0 + l], ds[t0 : t0 + l])
                for off, e in enumerate(es):
                    se_sums[t0 + off] += e.mantissa * e.mantissa
                    ce_sums[t0 + off] += ce
        else:
            stepper = (
                (lambda x, d: dlms_step_m(filt, x, d))
                if isinstance(filt, DlmsState)
                else (lambda x, d: step_m(filt, x, d)[:2])
            )
            for t in range(iters):
                ce = 0
                for i in range(n):
                    diff = plant[i] - coeff[i]
                    ce += diff * diff
                _, e = stepper(xs[t], ds[t])
                se_sums[t] += e.mantissa * e.mantissa
                ce_sums[t] += ce
        final_states.append(filt)

    n_trials = len(trials)
    se_scale = 2.0 ** (-2 * config.e_fl)
    ce_scale = 2.0 ** (-2 * (config.coeff_bits - 1))
    mse = np.array([float(s) / n_trials for s in se_sums]) * se_scale
    cerr = np.array([float(s) / n_trials for s in ce_sums]) * ce_scale
    curve = LearningCurve(mse, _db(mse), cerr, _db(cerr))
    return RunResult(curve, final_states)


def da_trajectory(
    config: ExperimentConfig, x_m: Sequence[int], d_m: Sequence[int]
) -> tuple[list[int], list[int], list[int]]:
    """Run the configured DA filter over a stream; mantissa trajectories."""
    filt = make_filter(config)
    ys: list[int] = []
    es: list[int] = []
    if isinstance(filt, BlmsState):
        l = config.block
        for t0 in range(0, len(x_m), l):
            yb, eb = blms_step_m(filt, list(x_m[t0 : t0 + l]), list(d_m[t0 : t0 + l]))
            ys.extend(y.mantissa for y in yb)
            es.extend(e.mantissa for e in eb)
        inner = filt.inner
    elif isinstance(filt, DlmsState):
        for x, d in zip(x_m, d_m):
            y, e = dlms_step_m(filt, x, d)
            ys.append(y.mantissa)
            es.append(e.mantissa)
        inner = filt.inner
    else:
        for x, d in zip(x_m, d_m):
            y, e, _ = step_m(filt, x, d)
            ys.append(y.mantissa)
            es.append(e.mantissa)
        inner = filt
    return ys, es, list(inner.coeff_m)


def trace_iterations(config: ExperimentConfig, iters: int) -> list:
    """Drive the configured filter on trial-0 stimulus, collecting traces.

    Returns one CycleTrace per produced output, in sample order.
    """
    if iters < 1:
        raise ConfigError("trace length must be >= 1")
    run_len = _trace_len(config, iters)
    cfg = dataclasses.replace(config, iterations=run_len)
    data = generate_trial(cfg, 0)
    filt = make_filter(cfg)
    inner = filt.inner if isinstance(filt, (DlmsState, BlmsState)) else filt
    sink: list = []
    inner.trace_sink = sink
    xs = data.x_m.tolist()
    ds = data.d_m.tolist()
    if isinstance(filt, BlmsState):
        for t0 in range(0, run_len, cfg.block):
            blms_step_m(filt, xs[t0 : t0 + cfg.block], ds[t0 : t0 + cfg.block])
    elif isinstance(filt, DlmsState):
        for x, d in zip(xs, ds):
            dlms_step_m(filt, x, d)
    else:
        for x, d in zip(xs, ds):
            step_m(filt, x, d)
    inner.trace_sink = None
    return sink[:iters]


def _trace_len(config: ExperimentConfig, iters: int) -> int:
    if config.variant == "blms":
        # keep whole blocks so the stepper contract holds
        return -(-iters // config.block) * config.block
    return iters


def reference_lms(
    config: ExperimentConfig,
    x_m: Sequence[int],
    d_m: Sequence[int],
    coeff_history: Optional[list] = None,
) -> tuple[list[int], list[int], list[int]]:
    """Direct fixed-point MAC trajectory with the DA quantization contract.

    No lookup tables anywhere: the output is the plain per-tap product sum,
    quantized once.  This is the independent oracle the DA paths are tested
    against, bit for bit.  If ``coeff_history`` is a list, the coefficient
    vector in effect at each output is appended to it.
    """
    n = config.n_taps
    b = config.coeff_bits
    x_fl = config.x_fl
    y_wl, y_fl = config.y_wl, config.y_fl
    e_wl, e_fl = config.e_wl, config.e_fl
    mode = config.rounding
    mu = config.resolve_mu()
    mu_m = mu.mantissa
    acc_fl = b - 1 + x_fl
    term_fl = mu.fl + e_fl + x_fl
    s = max(term_fl, b - 1)
    sh_w = s - (b - 1)
    sh_t = s - term_fl
    e_s = max(y_fl, e_fl)

    window = [0] * n
    w = [0] * n
    ys: list[int] = []
    es: list[int] = []
    pipe: list[tuple[int, tuple[int, ...]]] = []
    block_grad = [0] * n
    block_fill = 0

    def mac_output(dm: int) -> tuple[int, int]:
        acc = 0
        for i in range(n):
            acc += w[i] * window[i]
        y_m, _ = fit_mantissa(acc, acc_fl, y_wl, y_fl, mode)
        e_num = (dm - y_m) << (e_s - y_fl)
        e_m, _ = fit_mantissa(e_num, e_s, e_wl, e_fl, mode)
        return y_m, e_m

    def apply(terms: Sequence[int]) -> None:
        for i in range(n):
            num = (w[i] << sh_w) + (terms[i] << sh_t)
            w[i], _ = fit_mantissa(num, s, b, b - 1, mode)

    for t, (xm, dm) in enumerate(zip(x_m, d_m)):
        window = [xm] + window[:-1]
        if coeff_history is not None:
            coeff_history.append(list(w))
        y_m, e_m = mac_output(dm)
        ys.append(y_m)
        es.append(e_m)
        if config.variant == "dlms":
            pipe.append((e_m, tuple(window)))
            if len(pipe) > config.delay:
                e_old, win_old = pipe.pop(0)
                apply([mu_m * e_old * x for x in win_old])
        elif config.variant == "blms":
            for i in range(n):
                block_grad[i] += e_m * window[i]
            block_fill += 1
            if block_fill == config.block:
                apply([mu_m * g for g in block_grad])
                block_grad = [0] * n
                block_fill = 0
        else:
            apply([mu_m * e_m * x for x in window])
    return ys, es, w


def reference_lms_float(
    config: ExperimentConfig,
    x: Sequence[float],
    d: Sequence[float],
    coeff_history: Optional[list] = None,
) -> tuple[list[float], list[float], list[float]]:
    """Floating-point twin of reference_lms (no quantization anywhere)."""
    n = config.n_taps
    mu = config.resolve_mu().value
    window = [0.0] * n
    w = [0.0] * n
    ys: list[float] = []
    es: list[float] = []
    pipe: list[tuple[float, tuple[float, ...]]] = []
    block_grad = [0.0] * n
    block_fill = 0
    for xm, dm in zip(x, d):
        window = [xm] + window[:-1]
        if coeff_history is not None:
            coeff_history.append(list(w))
        y = sum(w[i] * window[i] for i in range(n))
        e = dm - y
        ys.append(y)
        es.append(e)
        if config.variant == "dlms":
            pipe.append((e, tuple(window)))
            if len(pipe) > config.delay:
                e_old, win_old = pipe.pop(0)
                for i in range(n):
                    w[i] += mu * e_old * win_old[i]
        elif config.variant == "blms":
            for i in range(n):
                block_grad[i] += e * window[i]
            block_fill += 1
            if block_fill == config.block:
                for i in range(n):
                    w[i] += mu * block_grad[i]
                block_grad = [0.0] * n
                block_fill = 0
        else:
            for i in range(n):
                w[i] += mu * e * window[i]
    return ys, es, w
