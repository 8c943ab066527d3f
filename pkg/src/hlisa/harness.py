"""Declarative Monte-Carlo experiments.

An experiment is described by an INI-style text file::

    [system]
    n_tx = 64
    bandwidth_hz = 800e6
    gain_mode = delay-phase

    [experiment]
    snr_grid_db = -10, 0, 10
    trials = 100
    seed = 1

    [method.lisa-dw]

    [method.hw-3bit]
    kind = lisa-hw
    ps_bits = 3

Every ``[method.<label>]`` block adds one method; ``kind`` defaults to the
label. Trial ``t`` draws its channel from ``trial_seed(seed, t)``, the
``t``-th output of a SplitMix64 generator seeded with ``seed``, so results
do not depend on how trials are spread over worker processes. All methods
and SNR points of a trial share one channel realization.
"""

import configparser
import csv
import io
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional, Tuple

import numpy as np

from .baselines import METHODS, run_method
from .channel import (DEFAULT_GAIN_MODE, GAIN_MODES, SystemConfig,
                      channel_tensor, effective_rank, generate_realization,
                      stacked_channel)
from .metrics import (equivalent_gains, kolmogorov_distance_uniform,
                      normalized_gain_profile)

__all__ = ["ConfigError", "MethodSpec", "ExperimentSpec", "ResultRow",
           "SweepResult", "splitmix64", "trial_seed", "load_spec",
           "parse_spec", "run_sweep", "run_gains", "run_cdf", "run_rank",
           "write_csv", "csv_text", "replace_seed", "RESULT_HEADER",
           "AGGREGATE_HEADER", "GAINS_HEADER", "CDF_HEADER", "RANK_HEADER",
           "OUTPUTS"]

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15

OUTPUTS = ("rate-vs-snr", "gains-per-subcarrier", "switchoff-cdf",
           "effective-rank")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment description."""


def splitmix64(x):
    """One SplitMix64 step: advance ``x`` by the golden gamma and mix."""
    z = (x + GOLDEN64) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(base, trial):
    """Seed of trial ``trial`` (0-based) for base seed ``base``."""
    return splitmix64((base + trial * GOLDEN64) & MASK64)


@dataclass(frozen=True)
class MethodSpec:
    label: str
    kind: str
    nu: float = 0.0
    n_subbands: Optional[int] = None
    ps_bits: Optional[int] = None
    beam_squint: Optional[bool] = None
    gain_mode: Optional[str] = None


@dataclass(frozen=True)
class ExperimentSpec:
    system: SystemConfig
    snr_grid_db: Tuple[float, ...]
    trials: int
    seed: int
    methods: Tuple[MethodSpec, ...]
    gain_mode: str = DEFAULT_GAIN_MODE
    outputs: Tuple[str, ...] = ("rate-vs-snr",)
    bandwidths_hz: Tuple[float, ...] = ()
    carriers_hz: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db must not be empty")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.gain_mode not in GAIN_MODES:
            raise ConfigError(f"unknown gain_mode {self.gain_mode!r}")
        for m in self.methods:
            if m.kind not in METHODS:
                raise ConfigError(f"unknown method {m.kind!r} in block "
                                  f"[method.{m.label}]; expected one of "
                                  f"{', '.join(METHODS)}")
        for o in self.outputs:
            if o not in OUTPUTS:
                raise ConfigError(f"unknown output {o!r}")


@dataclass
class ResultRow:
    method: str
    snr_db: float
    trial: int
    seed: int
    sum_rate: float
    streams_allocated: int
    subcarriers_off: int
    wall_time_ms: float
    realization: str = ""


RESULT_HEADER = ("method", "snr_db", "trial", "sum_rate", "streams_allocated",
                 "subcarriers_off", "seed", "realization")
AGGREGATE_HEADER = ("method", "snr_db", "trials", "mean_sum_rate",
                    "mean_streams_allocated", "mean_subcarriers_off")
GAINS_HEADER = ("bandwidth_hz", "method", "snr_db", "subcarrier",
                "mean_norm_gain")
CDF_HEADER = ("bandwidth_hz", "method", "snr_db", "subcarrier", "count",
              "cdf", "ks_uniform")
RANK_HEADER = ("carrier_hz", "bandwidth_hz", "avg_eff_rank")


@dataclass
class SweepResult:
    rows: List[ResultRow]
    aggregate: List[dict] = field(default_factory=list)


# -- config parsing ---------------------------------------------------------

_SYSTEM_KEYS = {f.name: f.type for f in fields(SystemConfig)}
_EXPERIMENT_KEYS = {"snr_grid_db", "trials", "seed", "outputs", "gain_mode",
                    "bandwidths_hz", "carriers_hz"}
_METHOD_KEYS = {"kind", "nu", "n_subbands", "ps_bits", "beam_squint",
                "gain_mode"}


def _locate(text, section, key):
    """1-based line of ``key`` inside ``[section]``, or None."""
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(
                rf"{re.escape(key)}\s*[=:]", s):
            return no
    return None


def _where(text, path, section, key):
    line = _locate(text, section, key)
    loc = f"{path}:{line}" if line else path
    return f"{loc}: [{section}] {key}"


def _as_bool(raw):
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _as_optional_int(raw):
    v = raw.strip().lower()
    return None if v in ("", "none") else int(v)


def _as_floats(raw):
    return tuple(float(x) for x in re.split(r"[,\s]+", raw.strip()) if x)


def _as_int(raw):
    v = float(raw)
    if v != int(v):
        raise ValueError(f"not an integer: {raw!r}")
    return int(v)


def parse_spec(text, path="<config>"):
    """Parse the text of an experiment file into an :class:`ExperimentSpec`."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None

    def convert(section, key, fn):
        try:
            return fn(cp[section][key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{_where(text, path, section, key)}: {exc}") \
                from None

    for section in cp.sections():
        allowed = (_SYSTEM_KEYS if section == "system" else
                   _EXPERIMENT_KEYS if section == "experiment" else
                   _METHOD_KEYS if section.startswith("method.") else None)
        if allowed is None:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in cp[section]:
            if key not in allowed:
                raise ConfigError(
                    f"{_where(text, path, section, key)}: unknown field")

    sys_kwargs = {}
    if cp.has_section("system"):
        for key in cp["system"]:
            if key == "beam_squint":
                fn = _as_bool
            elif key == "spacing_m" or key.endswith("_hz") or key in (
                    "p_tx", "noise_var"):
                fn = float
            else:
                fn = _as_int
            sys_kwargs[key] = convert("system", key, fn)
    try:
        system = SystemConfig(**sys_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: [system] {exc}") from None

    exp = {}
    if cp.has_section("experiment"):
        conv = {"snr_grid_db": _as_floats, "trials": _as_int, "seed": _as_int,
                "outputs": lambda r: tuple(x for x in re.split(r"[,\s]+", r)
                                           if x),
                "gain_mode": str.strip, "bandwidths_hz": _as_floats,
                "carriers_hz": _as_floats}
        for key in cp["experiment"]:
            exp[key] = convert("experiment", key, conv[key])

    methods = []
    for section in cp.sections():
        if not section.startswith("method."):
            continue
        label = section[len("method."):].strip()
        kw = {"label": label, "kind": cp[section].get("kind", label).strip()}
        conv = {"nu": float, "n_subbands": _as_optional_int,
                "ps_bits": _as_optional_int, "beam_squint": _as_bool,
                "gain_mode": str.strip}
        for key in cp[section]:
            if key != "kind":
                kw[key] = convert(section, key, conv[key])
        if kw.get("gain_mode") not in (None,) + GAIN_MODES:
            raise ConfigError(f"{_where(text, path, section, 'gain_mode')}: "
                              f"unknown gain_mode {kw['gain_mode']!r}")
        methods.append(MethodSpec(**kw))
    if not methods:
        methods = [MethodSpec(m, m) for m in METHODS]

    exp.setdefault("snr_grid_db", (0.0,))
    exp.setdefault("trials", 1)
    exp.setdefault("seed", 0)
    try:
        return ExperimentSpec(system=system, methods=tuple(methods), **exp)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def replace_seed(spec, seed):
    """Copy of ``spec`` with another base seed."""
    try:
        return replace(spec, seed=seed)
    except ConfigError as exc:
        raise ConfigError(f"--seed: {exc}") from None


def load_spec(path):
    """Read and parse an experiment file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: "
                          f"{exc.strerror}") from None
    return parse_spec(text, str(path))


# -- trial execution --------------------------------------------------------

def _channels(real, system, method, default_mode):
    gain_mode = method.gain_mode or default_mode
    squint = system.beam_squint if method.beam_squint is None \
        else method.beam_squint
    if gain_mode == real.gain_mode and squint == real.config.beam_squint:
        return channel_tensor(real)
    variant = type(real)(replace(real.config, beam_squint=squint), real.aod,
                         real.aoa, real.gain, real.delay, gain_mode)
    return channel_tensor(variant)


def _sweep_trial(args):
    spec, trial = args
    seed = trial_seed(spec.seed, trial)
    real = generate_realization(spec.system, seed, spec.gain_mode)
    tag = real.fingerprint()
    rows = []
    for snr in spec.snr_grid_db:
        cfg = spec.system.with_snr_db(snr)
        for m in spec.methods:
            H = _channels(real, spec.system, m, spec.gain_mode)
            t0 = time.perf_counter()
            rate, streams, off, _ = run_method(m.kind, H, cfg, m.nu,
                                               m.n_subbands, m.ps_bits)
            ms = 1e3 * (time.perf_counter() - t0)
            rows.append(ResultRow(m.label, snr, trial, seed, rate, streams,
                                  off, ms, tag))
    return rows


def _map_trials(fn, spec, parallel):
    jobs = [(spec, t) for t in range(spec.trials)]
    if parallel and parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def run_sweep(spec, parallel=1):
    """Sum rate of every method at every SNR for every trial.

    Rows are ordered by method (config order), SNR (grid order) and trial;
    the aggregate holds per-(method, SNR) means.
    """
    per_trial = _map_trials(_sweep_trial, spec, parallel)
    rows = [r for trial_rows in per_trial for r in trial_rows]
    order = {m.label: i for i, m in enumerate(spec.methods)}
    snr_idx = {s: i for i, s in enumerate(spec.snr_grid_db)}
    rows.sort(key=lambda r: (order[r.method], snr_idx[r.snr_db], r.trial))
    agg = []
    for m in spec.methods:
        for snr in spec.snr_grid_db:
            sel = [r for r in rows if r.method == m.label and r.snr_db == snr]
            agg.append({
                "method": m.label, "snr_db": snr, "trials": len(sel),
                "mean_sum_rate": math.fsum(r.sum_rate for r in sel) / len(sel),
                "mean_streams_allocated":
                    sum(r.streams_allocated for r in sel) / len(sel),
                "mean_subcarriers_off":
                    sum(r.subcarriers_off for r in sel) / len(sel)})
    return SweepResult(rows, agg)


def _bandwidths(spec):
    return spec.bandwidths_hz or (spec.system.bandwidth_hz,)


def _wideband_methods(spec):
    return [m for m in spec.methods if m.kind != "lisa-dn"]


def _solution_trial(args):
    spec, trial = args
    seed = trial_seed(spec.seed, trial)
    out = {}
    for B in _bandwidths(spec):
        system = replace(spec.system, bandwidth_hz=B)
        real = generate_realization(system, seed, spec.gain_mode)
        for m in _wideband_methods(spec):
            H = _channels(real, system, m, spec.gain_mode)
            for snr in spec.snr_grid_db:
                cfg = system.with_snr_db(snr)
                _, _, _, sol = run_method(m.kind, H, cfg, m.nu, m.n_subbands,
                                          m.ps_bits)
                prof = normalized_gain_profile(equivalent_gains(sol, H))
                off = (~sol.beta()).sum(axis=0) if sol.n_streams else \
                    np.zeros(system.n_subcarriers, dtype=int)
                out[(B, m.label, snr)] = (prof, off)
    return out


def run_gains(spec, parallel=1):
    """Trial-averaged normalized ``lambda^2`` per subcarrier.

    Returns dict rows ``bandwidth_hz, method, snr_db, subcarrier,
    mean_norm_gain``.
    """
    per_trial = _map_trials(_solution_trial, spec, parallel)
    rows = []
    for key in per_trial[0]:
        B, label, snr = key
        prof = np.mean([t[key][0] for t in per_trial], axis=0)
        for ell, v in enumerate(prof, 1):
            rows.append({"bandwidth_hz": B, "method": label, "snr_db": snr,
                         "subcarrier": ell, "mean_norm_gain": float(v)})
    return rows


def run_cdf(spec, parallel=1):
    """Conditional CDF of switched-off slots over the subcarrier index.

    Returns dict rows ``bandwidth_hz, method, snr_db, subcarrier, count,
    cdf, ks_uniform``; ``cdf`` is empty (NaN) when nothing was switched off.
    """
    per_trial = _map_trials(_solution_trial, spec, parallel)
    rows = []
    for key in per_trial[0]:
        B, label, snr = key
        counts = np.sum([t[key][1] for t in per_trial], axis=0)
        total = counts.sum()
        cdf = np.cumsum(counts) / total if total else \
            np.full(counts.size, np.nan)
        ks = kolmogorov_distance_uniform(cdf) if total else float("nan")
        for ell in range(counts.size):
            rows.append({"bandwidth_hz": B, "method": label, "snr_db": snr,
                         "subcarrier": ell + 1, "count": int(counts[ell]),
                         "cdf": float(cdf[ell]), "ks_uniform": ks})
    return rows


def _rank_trial(args):
    spec, trial = args
    seed = trial_seed(spec.seed, trial)
    out = {}
    for fc in spec.carriers_hz or (spec.system.carrier_hz,):
        for B in _bandwidths(spec):
            system = replace(spec.system, carrier_hz=fc, bandwidth_hz=B,
                             spacing_m=None)
            real = generate_realization(system, seed, spec.gain_mode)
            out[(fc, B)] = [effective_rank(stacked_channel(real, k))
                            for k in range(system.n_users)]
    return out


def run_rank(spec, parallel=1):
    """Average effective rank of the stacked all-subcarrier channel.

    One row per (carrier, bandwidth) pair: ``carrier_hz, bandwidth_hz,
    avg_eff_rank``.
    """
    per_trial = _map_trials(_rank_trial, spec, parallel)
    rows = []
    for key in per_trial[0]:
        vals = [v for t in per_trial for v in t[key]]
        rows.append({"carrier_hz": key[0], "bandwidth_hz": key[1],
                     "avg_eff_rank": sum(vals) / len(vals)})
    return rows


# -- output -----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows, header, fh):
    """Write dicts or :class:`ResultRow` objects with a fixed column order."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        d = r if isinstance(r, dict) else r.__dict__
        w.writerow([_fmt(d[h]) for h in header])


def csv_text(rows, header):
    buf = io.StringIO()
    write_csv(rows, header, buf)
    return buf.getvalue()
