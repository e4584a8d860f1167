"""Command-line front end: ``arq-rateadapt <curves|estimate> <subcommand>``.

Every command writes tabular data (CSV by default, or JSON) to stdout or
``--out``.  SNRs are given in dB on the command line and converted to
linear values internally.  Options may also come from a JSON file passed
with ``--config``; explicit flags win over file values.

Exit codes: 0 success, 2 configuration error, 3 every row infeasible
(output is still written).
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .error_models import SignalModel, db_to_linear, linear_to_db
from .mc_sim import (
    GAUSSIAN_RATES,
    QAM_RATES,
    McConfig,
    TrajectoryConfig,
    run_efficiency_experiment,
    run_trajectory_experiment,
)
from .probe_planning import (
    gaussian_rate_for_error,
    qam_rate_for_error,
    sumrate_max,
    tp_min_gaussian,
    tp_min_qam,
)
from .rate_allocation import (
    HIGH,
    LOW,
    LinkParams,
    PosteriorSummary,
    gaussian_low_threshold,
    naive_rate,
    penalties,
    qam_threshold,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


class ConfigError(ValueError):
    pass


# Per-command defaults; None means "required or derived".
DEFAULTS = {
    "common": {
        "target_error": 1e-3,
        "alpha": None,
        "n": 500,
        "format": "csv",
        "out": None,
        "seed": 0,
    },
    ("curves", "qam-rate"): {
        "gamma_hat_db": [13.0, 20.0, 25.0],
        "from": None, "to": 300.0, "points": 100, "scale": "log",
    },
    ("curves", "gaussian-rate"): {
        "regime": LOW, "gamma_hat_db": None,
        "from": None, "to": 300.0, "points": 100, "scale": "log",
    },
    ("curves", "gaussian-snr"): {
        "regime": LOW, "eff_snr": None,
        "from": None, "to": None, "points": 61, "scale": "dB",
    },
    ("curves", "gaussian-figure"): {
        "regime": LOW, "gamma_hat_db": None, "eff_snr": None, "points": None,
    },
    ("curves", "tp-min"): {
        "model": "qam", "gamma_hat_db": None,
        "from": 1e-4, "to": 0.3, "points": 60, "scale": "log",
    },
    ("curves", "sumrate"): {
        "model": "qam", "regime": LOW, "T": [5, 50], "rates": None,
        "from": None, "to": None, "points": 31, "scale": "dB",
    },
    ("estimate", "run"): {
        "model": "qam", "gamma_db": 10.0, "beta": 0.5, "tp": 500,
        "trial": 0, "gamma_hat0_db": None, "rate0": None, "rates": None,
        "rho_grid": 129,
    },
    ("estimate", "efficiency"): {
        "model": "qam", "gamma_db": 10.0, "beta": 1.0, "tp": 5000,
        "trials": 500, "gamma_hat0_db": None, "rate0": None, "rates": None,
        "workers": 1, "rho_grid": 129, "format": "json",
    },
}

SWEEP_DEFAULTS = {
    ("gaussian-rate", LOW): ([-3.0, -8.0, -12.0], None),
    ("gaussian-rate", HIGH): ([13.0, 20.0, 25.0], None),
    ("gaussian-snr", LOW): ([60.0, 100.0], (-15.0, 0.0)),
    ("gaussian-snr", HIGH): ([20.0, 60.0], (5.0, 30.0)),
    ("sumrate", "qam"): (None, (10.0, 40.0)),
    ("sumrate", "gaussian"): (None, (-15.0, 0.0)),
}


def _add_common(p):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--target-error", type=float, dest="target_error",
                   default=None, help="packet error target exp(-alpha)")
    p.add_argument("--alpha", type=float, default=None,
                   help="QoS exponent; overrides --target-error")
    p.add_argument("--n", type=int, default=None, help="symbols per packet")
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--seed", type=int, default=None)


def _add_sweep(p):
    p.add_argument("--from", dest="from", type=float, default=None)
    p.add_argument("--to", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--scale", choices=["linear", "dB", "log"], default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="arq-rateadapt",
        description="ACK/NACK-based SNR estimation and rate adaptation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    top = parser.add_subparsers(dest="group", required=True)

    curves = top.add_parser("curves", help="bound curves behind the figures")
    csub = curves.add_subparsers(dest="command", required=True)

    p = csub.add_parser("qam-rate", help="QAM rates and penalties vs effective SNR")
    _add_common(p)
    _add_sweep(p)
    p.add_argument("--gamma-hat-db", dest="gamma_hat_db", type=float,
                   action="append", default=None)

    p = csub.add_parser("gaussian-rate",
                        help="Gaussian rates and penalties vs effective SNR")
    _add_common(p)
    _add_sweep(p)
    p.add_argument("--regime", choices=[LOW, HIGH], default=None)
    p.add_argument("--gamma-hat-db", dest="gamma_hat_db", type=float,
                   action="append", default=None)

    p = csub.add_parser("gaussian-snr",
                        help="Gaussian rates vs SNR estimate at fixed effective SNR")
    _add_common(p)
    _add_sweep(p)
    p.add_argument("--regime", choices=[LOW, HIGH], default=None)
    p.add_argument("--eff-snr", dest="eff_snr", type=float, action="append",
                   default=None)

    p = csub.add_parser("gaussian-figure",
                        help="both Gaussian panels: vs effective SNR and vs SNR estimate")
    _add_common(p)
    p.add_argument("--regime", choices=[LOW, HIGH], default=None)
    p.add_argument("--gamma-hat-db", dest="gamma_hat_db", type=float,
                   action="append", default=None)
    p.add_argument("--eff-snr", dest="eff_snr", type=float, action="append",
                   default=None)
    p.add_argument("--points", type=int, default=None)

    p = csub.add_parser("tp-min", help="minimum probing duration vs probe error")
    _add_common(p)
    _add_sweep(p)
    p.add_argument("--model", choices=["qam", "gaussian", "both"], default=None)
    p.add_argument("--gamma-hat-db", dest="gamma_hat_db", type=float,
                   action="append", default=None)

    p = csub.add_parser("sumrate", help="normalized sum-rate bound vs SNR")
    _add_common(p)
    _add_sweep(p)
    p.add_argument("--model", choices=["qam", "gaussian"], default=None)
    p.add_argument("--regime", choices=[LOW, HIGH], default=None)
    p.add_argument("--T", dest="T", type=int, action="append", default=None)
    p.add_argument("--rates", type=float, nargs="+", default=None,
                   help="probe rate set (default: model's standard set)")

    est = top.add_parser("estimate", help="recursive estimator experiments")
    esub = est.add_subparsers(dest="command", required=True)
    for name, text in (("run", "emit one estimator trajectory"),
                       ("efficiency", "Monte Carlo efficiency report")):
        p = esub.add_parser(name, help=text)
        _add_common(p)
        p.add_argument("--model", choices=["qam", "gaussian"], default=None)
        if name == "run":
            p.add_argument("--gamma-db", dest="gamma_db", type=float,
                           action="append", default=None,
                           help="repeat for several trajectories (needs --out)")
        else:
            p.add_argument("--gamma-db", dest="gamma_db", type=float, default=None)
        if name == "run":
            p.add_argument("--beta", type=float, action="append", default=None,
                           help="repeat for several trajectories (needs --out)")
        else:
            p.add_argument("--beta", type=float, default=None)
        p.add_argument("--tp", type=int, default=None)
        p.add_argument("--gamma-hat0-db", dest="gamma_hat0_db", type=float,
                       default=None)
        p.add_argument("--rate0", type=float, default=None)
        p.add_argument("--rates", type=float, nargs="+", default=None)
        p.add_argument("--rho-grid", dest="rho_grid", type=int, default=None)
        if name == "run":
            p.add_argument("--trial", type=int, default=None)
        else:
            p.add_argument("--trials", type=int, default=None)
            p.add_argument("--workers", type=int, default=None)
    return parser


# -- option resolution -------------------------------------------------------

def resolve(ns):
    """Merge built-in defaults, ``--config`` file values and flags."""
    key = (ns.group, ns.command)
    opts = dict(DEFAULTS["common"])
    opts.update(DEFAULTS[key])
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                file_opts = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(file_opts, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_opts) - set(opts)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        opts.update(file_opts)
    for k, v in vars(ns).items():
        if k in ("group", "command", "config") or v is None:
            continue
        opts[k] = v
    return opts


def _link(opts, **extra):
    n = opts["n"]
    if not isinstance(n, int) or n < 1:
        raise ConfigError("n must be a positive integer")
    if opts["alpha"] is not None:
        alpha = float(opts["alpha"])
        if alpha <= 0:
            raise ConfigError("alpha must be positive")
    else:
        te = float(opts["target_error"])
        if not 0.0 < te < 1.0:
            raise ConfigError("target_error must lie in (0, 1)")
        alpha = -math.log(te)
    return LinkParams(alpha, n, **extra)


def _sweep(opts, default_range=None):
    lo, hi = opts["from"], opts["to"]
    if default_range is not None:
        lo = default_range[0] if lo is None else lo
        hi = default_range[1] if hi is None else hi
    points, scale = int(opts["points"]), opts["scale"]
    if points < 2:
        raise ConfigError("points must be at least 2")
    if lo is None or hi is None:
        raise ConfigError("sweep needs --from and --to")
    lo, hi = float(lo), float(hi)
    if scale == "log":
        if lo <= 0 or hi <= 0:
            raise ConfigError("log sweep needs positive bounds")
        return np.geomspace(lo, hi, points)
    if scale in ("linear", "dB"):
        return np.linspace(lo, hi, points)
    raise ConfigError(f"unknown scale {scale!r}")


def _num(x):
    if x is None:
        return None
    return float(x)


# -- curves ------------------------------------------------------------------

def _penalty_row(gamma_hat, eff, lp, model, regime):
    p = PosteriorSummary.from_effective_snr(gamma_hat, eff)
    rep = penalties(p, lp, model, regime)
    return {
        "gamma_hat_db": float(linear_to_db(gamma_hat)),
        "eff_snr": float(eff),
        "r_naive": rep.naive_rate,
        "r_star_bar": rep.backoff_rate,
        "delta_bar": rep.rate_penalty_delta,
        "mu_db": rep.power_penalty_db,
        "feasible": rep.feasible,
    }


def curves_qam_rate(opts):
    lp = _link(opts)
    eff = _sweep(opts, (qam_threshold(lp), None))
    rows = []
    for gdb in opts["gamma_hat_db"]:
        g = float(db_to_linear(gdb))
        rows.extend(_penalty_row(g, e, lp, "qam", None) for e in eff)
    return rows


def curves_gaussian_rate(opts):
    regime = opts["regime"]
    lp = _link(opts)
    gammas = opts["gamma_hat_db"] or SWEEP_DEFAULTS[("gaussian-rate", regime)][0]
    lo = gaussian_low_threshold(lp) if regime == LOW else 1.0
    eff = _sweep(opts, (lo, None))
    rows = []
    for gdb in gammas:
        g = float(db_to_linear(gdb))
        rows.extend(_penalty_row(g, e, lp, "gaussian", regime) for e in eff)
    return rows


def curves_gaussian_snr(opts):
    regime = opts["regime"]
    lp = _link(opts)
    effs, rng = SWEEP_DEFAULTS[("gaussian-snr", regime)]
    effs = opts["eff_snr"] or effs
    gdbs = _sweep(opts, rng)
    rows = []
    for e in effs:
        for gdb in gdbs:
            g = float(db_to_linear(gdb))
            row = _penalty_row(g, e, lp, "gaussian", regime)
            row["shannon"] = 0.5 * math.log2(1.0 + g)
            rows.append(row)
    return rows


def curves_gaussian_figure(opts):
    """Panel (a) from gaussian-rate and panel (b) from gaussian-snr, tagged."""
    rows = []
    for panel, key, func in (("a", "gaussian-rate", curves_gaussian_rate),
                             ("b", "gaussian-snr", curves_gaussian_snr)):
        sub = dict(opts)
        sub.update({k: v for k, v in DEFAULTS[("curves", key)].items()
                    if k not in ("regime", "gamma_hat_db", "eff_snr")})
        if opts["points"] is not None:
            sub["points"] = opts["points"]
        for row in func(sub):
            g = float(db_to_linear(row["gamma_hat_db"]))
            row.setdefault("shannon", 0.5 * math.log2(1.0 + g))
            rows.append({"panel": panel, **row})
    return rows


def curves_tp_min(opts):
    lp = _link(opts)
    model = opts["model"]
    if model == "both":
        return (curves_tp_min({**opts, "model": "qam"})
                + curves_tp_min({**opts, "model": "gaussian"}))
    probe_errors = _sweep(opts)
    rows = []
    if model == "qam":
        # with gamma_hat = gamma the bound no longer depends on the SNR
        for eps in probe_errors:
            tp = tp_min_qam(1.0, 1.0, eps, lp)
            rows.append({"model": model, "gamma_hat_db": None,
                         "probe_error": float(eps),
                         "probe_rate": qam_rate_for_error(1.0, eps, lp.n),
                         "tp_min": tp, "feasible": True})
        return rows
    gdbs = opts["gamma_hat_db"] or [-3.0, -7.0, -10.0]
    for gdb in gdbs:
        g = float(db_to_linear(gdb))
        for eps in probe_errors:
            try:
                rate = gaussian_rate_for_error(g, eps, lp.n)
            except ValueError:
                rate = None
            tp = None if rate is None else tp_min_gaussian(g, g, rate, lp)
            rows.append({"model": model, "gamma_hat_db": float(gdb),
                         "probe_error": float(eps), "probe_rate": rate,
                         "tp_min": tp, "feasible": tp is not None})
    return rows


def _model(opts, rho_grid=None):
    if opts["model"] == "qam":
        return SignalModel.qam(opts["n"])
    if rho_grid is None:
        return SignalModel.gaussian(opts["n"])
    return SignalModel.gaussian(opts["n"], rho_grid)


def _rates(opts):
    if opts.get("rates"):
        return tuple(float(r) for r in opts["rates"])
    return QAM_RATES if opts["model"] == "qam" else GAUSSIAN_RATES


def curves_sumrate(opts):
    model = _model(opts)
    regime = None if opts["model"] == "qam" else opts["regime"]
    lp = _link(opts, rate_set=_rates(opts))
    gdbs = _sweep(opts, SWEEP_DEFAULTS[("sumrate", opts["model"])][1])
    rows = []
    for T in opts["T"]:
        if int(T) < 2:
            raise ConfigError("T must be at least 2")
        for gdb in gdbs:
            g = float(db_to_linear(gdb))
            b = sumrate_max(g, lp, model, regime, block_length=int(T))
            rows.append({
                "model": opts["model"], "T": int(T), "gamma_db": float(gdb),
                "r_naive": naive_rate(PosteriorSummary(g), lp, model, regime),
                "shannon": 0.5 * math.log2(1.0 + g),
                "t_p_star": b.t_p_star,
                "r_data": b.rate_per_data_packet if b.total > 0 else None,
                "normalized_sum_rate": b.normalized,
                "feasible": b.total > 0,
            })
    return rows


# -- estimate ----------------------------------------------------------------

def _start(opts):
    if opts["model"] == "qam":
        g0, r0 = 3.0, 1.0
    else:
        g0, r0 = 0.0, 0.5
    g0 = g0 if opts["gamma_hat0_db"] is None else float(opts["gamma_hat0_db"])
    r0 = r0 if opts["rate0"] is None else float(opts["rate0"])
    return g0, r0


def _many(opts, key):
    v = opts[key]
    vals = [float(x) for x in v] if isinstance(v, (list, tuple)) else [float(v)]
    if not vals:
        raise ConfigError(f"need at least one {key}")
    return vals


def _betas(opts):
    return _many(opts, "beta")


def _check_estimate(opts, tp_key="tp"):
    if not all(0.0 < b <= 1.0 for b in _betas(opts)):
        raise ConfigError("beta must lie in (0, 1]")
    if int(opts[tp_key]) < 1:
        raise ConfigError("tp must be a positive integer")
    if opts["seed"] < 0:
        raise ConfigError("seed must be nonnegative")


def estimate_run(opts):
    """One trajectory per (gamma, beta) pair, all on the same stream.

    A single pair returns its rows; several return ``{suffix: rows}`` so
    that each trajectory lands in its own file.
    """
    _check_estimate(opts)
    betas, gammas = _betas(opts), _many(opts, "gamma_db")
    pairs = [(g, b) for g in gammas for b in betas]
    if len(pairs) > 1 and not opts["out"]:
        raise ConfigError("several trajectories need --out (one file each)")
    rates = _rates(opts)
    g0, r0 = _start(opts)
    if r0 not in rates:
        raise ConfigError(f"rate0 {r0} not in the rate set")
    model = _model(opts, opts["rho_grid"])
    cfgs = [TrajectoryConfig(
        gamma_db=g, model=model, rate_set=rates, gamma_hat0_db=g0, rate0=r0,
        beta=b, t_p=int(opts["tp"]), seed=int(opts["seed"]),
        trial=int(opts["trial"])) for g, b in pairs]
    out = {}
    for (g, b), traj in zip(pairs, run_trajectory_experiment(cfgs)):
        out[f"_g{g:g}dB_beta{b:g}"] = [
            {"t": r.t, "rate": r.rate, "feedback": r.feedback,
             "gamma_hat_db": float(linear_to_db(r.gamma_hat))} for r in traj]
    return out if len(pairs) > 1 else out.popitem()[1]


def estimate_efficiency(opts):
    _check_estimate(opts)
    if int(opts["trials"]) < 1:
        raise ConfigError("trials must be positive")
    rates = _rates(opts)
    g0, r0 = _start(opts)
    if r0 not in rates:
        raise ConfigError(f"rate0 {r0} not in the rate set")
    cfg = McConfig(
        gamma_db=float(opts["gamma_db"]), model=_model(opts, opts["rho_grid"]),
        rate_set=rates, beta=float(opts["beta"]), t_p=int(opts["tp"]),
        trials=int(opts["trials"]), seed=int(opts["seed"]),
        gamma_hat0_db=g0, rate0=r0, workers=max(1, int(opts["workers"])))
    return [run_efficiency_experiment(cfg).to_dict()]


COMMANDS = {
    ("curves", "qam-rate"): curves_qam_rate,
    ("curves", "gaussian-rate"): curves_gaussian_rate,
    ("curves", "gaussian-snr"): curves_gaussian_snr,
    ("curves", "gaussian-figure"): curves_gaussian_figure,
    ("curves", "tp-min"): curves_tp_min,
    ("curves", "sumrate"): curves_sumrate,
    ("estimate", "run"): estimate_run,
    ("estimate", "efficiency"): estimate_efficiency,
}


# -- output ------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows):
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(k)) for k in header])
    return buf.getvalue()


def to_json(rows, single=False):
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v

    data = [{k: clean(v) for k, v in r.items()} for r in rows]
    if single:
        data = data[0]
    return json.dumps(data, indent=2) + "\n"


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        opts = resolve(ns)
        if opts["format"] not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        rows = COMMANDS[(ns.group, ns.command)](opts)
    except (ConfigError, ValueError) as exc:
        print(f"arq-rateadapt: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    single = (ns.group, ns.command) == ("estimate", "efficiency")
    fmt = opts["format"]
    if isinstance(rows, dict):
        stem, dot, ext = opts["out"].rpartition(".")
        if not dot:
            stem, ext = opts["out"], fmt
        for suffix, part in rows.items():
            _write(f"{stem}{suffix}.{ext}", _render(part, fmt, single))
        return EXIT_OK
    _write(opts["out"], _render(rows, fmt, single))
    if "feasible" in (rows[0] if rows else {}) and not any(r["feasible"] for r in rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _render(rows, fmt, single):
    return to_json(rows, single) if fmt == "json" else to_csv(rows)


def _write(path, text):
    if path:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    sys.exit(main())
