"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 numerical divergence, 4 data too short.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import warnings
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import dynamics, experiments, synth
from .core import (
    BadConfigError,
    DivergedError,
    EmbeddingConfig,
    NonFiniteError,
    PhasembedError,
    SingularError,
    TimeSeries,
    TooShortError,
    validate_series,
)
from .embed import embed_channel, pad_and_unfold, stack_trajectories

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3
EXIT_SHORT = 4

SEED_ENV = "PHASEMBED_SEED"
T_UNIFORM_RTOL = 1e-9


class ParseError(PhasembedError, ValueError):
    pass


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def fmt(v) -> str:
    return repr(float(v))


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def series_to_csv(ts: TimeSeries, with_time: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(ts.names)
    w.writerow((["t"] if with_time else []) + names)
    for i in range(len(ts)):
        row = [fmt(i * ts.dt)] if with_time else []
        row.extend(fmt(v) for v in ts.values[:, i])
        w.writerow(row)
    return buf.getvalue()


def read_series_csv(path, dt: Optional[float] = None) -> TimeSeries:
    """Parse a SeriesCsv file. ``dt`` is required when there is no ``t`` column."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if len(body) < 2:
        raise ParseError(f"{path}: need at least 2 data rows")
    if any(len(r) != len(header) for r in body):
        raise ParseError(f"{path}: rows are not rectangular")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if header and header[0] == "t":
        t = data[:, 0]
        steps = np.diff(t)
        step = float(np.mean(steps))
        if not step > 0 or np.any(steps <= 0):
            raise ParseError(f"{path}: t column is not strictly increasing")
        if np.max(np.abs(steps - step)) > T_UNIFORM_RTOL * step:
            raise ParseError(f"{path}: t column is not uniformly sampled")
        dt = step
        data = data[:, 1:]
        header = header[1:]
    if not header:
        raise ParseError(f"{path}: no channel columns")
    ts = TimeSeries(data.T.copy(), 1.0 if dt is None else dt, header)
    try:
        return validate_series(ts)
    except PhasembedError as exc:
        raise ParseError(f"{path}: {exc}") from None


def tokens_to_csv(tokens: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    W = tokens.shape[1]
    w.writerow(["token_index"] + [f"f{i}" for i in range(W)])
    for k, row in enumerate(tokens):
        w.writerow([k] + [fmt(v) for v in row])
    return buf.getvalue()


def read_tokens_csv(path) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if header[0] != "token_index" or header[1:] != [f"f{i}" for i in range(len(header) - 1)]:
        raise ParseError(f"{path}: bad TokensCsv header")
    return np.array([[float(v) for v in r[1:]] for r in rows[1:] if r])


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def validate_report(obj) -> None:
    """Raise ``ValueError`` unless ``obj`` matches the ReportJson layout."""
    if obj.get("version") != "1":
        raise ValueError("version must be '1'")
    chans = obj["channels"]
    for c in chans:
        for key in ("name", "dominant_period", "tau", "m_cc", "lle", "warnings"):
            if key not in c:
                raise ValueError(f"channel entry lacks {key!r}")
        if not isinstance(c["warnings"], list):
            raise ValueError("warnings must be a list")
    mi = np.asarray(obj["mi_matrix"], dtype=float)
    if mi.shape != (len(chans), len(chans)):
        raise ValueError("mi_matrix must be C x C")
    if not np.array_equal(mi, mi.T):
        raise ValueError("mi_matrix is not symmetric")
    if obj["strategy"] not in ("CI", "CD"):
        raise ValueError("strategy must be CI or CD")
    if not isinstance(obj["rationale"], str):
        raise ValueError("rationale must be text")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CommandError(EXIT_USAGE, f"{SEED_ENV} must be an integer, got {env!r}") from None


def cmd_generate(args) -> int:
    seed = _seed(args)
    system = args.system
    if system == "sine":
        ts = synth.make_sine(args.omega, args.amplitude, args.phase, args.dt, args.len)
    elif system == "lorenz":
        ts = synth.make_lorenz(args.sigma, args.rho, args.beta, args.dt, args.len, seed)
    elif system == "rossler":
        ts = synth.make_rossler(args.a, args.b, args.c, args.dt, args.len, seed)
    else:
        ts = synth.make_mackey_glass(args.tau_mg, dt=args.dt, T=args.len, seed=seed)
    if args.snr_db is not None:
        ts = synth.add_noise(ts, args.snr_db, seed)
    atomic_write(args.out, series_to_csv(ts))
    return EXIT_OK


def cmd_analyze(args) -> int:
    ts = read_series_csv(args.input, args.dt)
    report = dynamics.analyze(ts, args.mi_threshold, args.lle_spread, args.bins)
    payload = report.to_dict()
    validate_report(payload)
    atomic_write(args.out, dumps_json(payload))
    return EXIT_OK


def _base_config(args) -> EmbeddingConfig:
    method = args.method.upper()
    if method == "ID" and args.m is not None:
        warnings.warn("ID embedding has fixed dimension 3; --m is ignored")
    kwargs = dict(method=method,
                  m=3 if args.m is None else args.m,
                  tau=1 if args.tau is None else args.tau,
                  delta=1 if args.delta is None else args.delta,
                  k=args.k, patch_len=args.patch, stride=args.stride, padding=args.padding,
                  channel_strategy=args.strategy.upper())
    return EmbeddingConfig(**kwargs)


def channel_configs(ts: TimeSeries, base: EmbeddingConfig, auto: bool, sidecar=None):
    """Per-channel configs; with ``auto`` the delay and dimension come from :func:`dynamics.analyze`."""
    if not auto:
        return [base] * ts.n_channels, None
    report = dynamics.analyze(ts)
    cfgs, chosen = [], []
    for diag in report.channels:
        m = diag.m_cc if diag.m_cc is not None else base.m
        tau = diag.tau if diag.tau is not None else base.tau
        if diag.m_cc is None or diag.tau is None:
            warnings.warn(f"{diag.name}: auto estimate unavailable, using m={m}, tau={tau}")
        k = None if base.k is None else min(base.k, m)
        cfg = EmbeddingConfig(base.method, m, tau, base.delta, k, base.patch_len, base.stride,
                              base.padding, base.channel_strategy)
        cfgs.append(cfg)
        chosen.append({"name": diag.name, "m": m, "tau": tau,
                       "dominant_period": diag.dominant_period, "warnings": diag.warnings})
        print(f"auto: {diag.name}: m={m} tau={tau}", file=sys.stderr)
    return cfgs, {"version": "1", "method": base.method, "channels": chosen,
                  "strategy_recommended": report.strategy}


def _suffixed(path: Path, i: int) -> Path:
    return path.with_name(f"{path.stem}_ch{i}{path.suffix}")


def cmd_embed(args) -> int:
    ts = read_series_csv(args.input, args.dt)
    base = _base_config(args)
    cfgs, sidecar = channel_configs(ts, base, args.auto)
    trajs = [embed_channel(ts.channel(i), cfg, ts.dt) for i, cfg in enumerate(cfgs)]
    out = Path(args.out)
    files = {}
    if base.channel_strategy == "CI":
        for i, tr in enumerate(trajs):
            tm = pad_and_unfold(tr, base.patch_len, base.stride, base.padding)
            files[_suffixed(out, i)] = tokens_to_csv(tm.tokens)
    else:
        tm = pad_and_unfold(stack_trajectories(trajs), base.patch_len, base.stride, base.padding)
        files[out] = tokens_to_csv(tm.tokens)
    if sidecar is not None:
        files[out.with_name(out.stem + ".auto.json")] = dumps_json(sidecar)
    for path, text in files.items():
        atomic_write(path, text)
    return EXIT_OK


def cmd_bench(args) -> int:
    ts = read_series_csv(args.input, args.dt)
    if not 0 <= args.channel < ts.n_channels:
        raise CommandError(EXIT_USAGE, f"--channel {args.channel} out of range")
    single = TimeSeries(ts.values[args.channel:args.channel + 1], ts.dt,
                        [ts.names[args.channel]])
    x = single.channel(0)
    base = _base_config(args)
    cfgs, sidecar = channel_configs(single, base, args.auto)
    cfg = cfgs[0]
    tm = pad_and_unfold(embed_channel(x, cfg, ts.dt), cfg.patch_len, cfg.stride, cfg.padding)
    try:
        ridge, base_res = experiments.token_forecast(x, tm, args.horizon, args.lam, args.split,
                                                     base.method.lower())
        sweep = None
        if args.dims:
            sweep = experiments.dim_sweep(x, args.dims, args.horizon, args.lam, _seed(args),
                                          cfg.patch_len, cfg.stride, args.split)
    except BadConfigError as exc:
        raise CommandError(EXIT_SHORT, f"insufficient data for benchmark: {exc}") from None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method_tag", "mse", "mae", "horizon", "n_test"])
    for r in (ridge, base_res):
        w.writerow([r.method_tag, fmt(r.mse), fmt(r.mae), r.horizon, r.n_test])
    files = {Path(args.out): buf.getvalue()}
    if sweep is not None:
        sb = io.StringIO()
        sw = csv.writer(sb, lineterminator="\n")
        sw.writerow(["dim", "test_mse", "train_mse"])
        for row in sweep:
            sw.writerow([row.dim, fmt(row.test_mse), fmt(row.train_mse)])
        out = Path(args.sweep_out) if args.sweep_out else Path(args.out).with_name(
            Path(args.out).stem + "_sweep.csv")
        files[out] = sb.getvalue()
    if sidecar is not None:
        files[Path(args.out).with_name(Path(args.out).stem + ".auto.json")] = dumps_json(sidecar)
    for path, text in files.items():
        atomic_write(path, text)
    return EXIT_OK


LYAPUNOV_FIXTURES = (
    ("diag(0.3,-0.2)", [[0.3, 0.0], [0.0, -0.2]], 5.0, [0.3, -0.2]),
    ("rotation", [[0.0, 1.0], [-1.0, 0.0]], 5.0, [0.0, 0.0]),
)


def cmd_verify(args) -> int:
    seed = _seed(args)
    failures = 0
    if args.suite in ("similarity", "all"):
        pairs = experiments.random_similarity_pairs(args.trials, seed=seed)
        if args.inject_singular and pairs:
            pairs[0] = (pairs[0][0], np.ones_like(pairs[0][1]))
        worst = 0.0
        for i, (J, W) in enumerate(pairs):
            try:
                res = experiments.verify_similarity(J, W)
            except SingularError as exc:
                print(f"similarity FAIL seed={seed} index={i}: {exc}")
                failures += 1
                continue
            worst = max(worst, res.max_deviation)
            if not res.passed:
                print(f"similarity FAIL seed={seed} index={i}: deviation {res.max_deviation:.3e}")
                failures += 1
        print(f"similarity: {len(pairs)} trials, max deviation {worst:.3e}, "
              f"{'PASS' if failures == 0 else 'FAIL'}")
    if args.suite in ("lyapunov", "all"):
        print(f"{'fixture':<16}{'t':>6}  exponents")
        for name, A, t, expect in LYAPUNOV_FIXTURES:
            lam = experiments.verify_lyapunov_svd(A, t)
            ok = bool(np.max(np.abs(lam - np.asarray(expect))) < 1e-6)
            failures += 0 if ok else 1
            print(f"{name:<16}{t:>6g}  {' '.join(f'{v:+.9f}' for v in lam)}  "
                  f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if failures == 0 else EXIT_VERIFY


def cmd_make_goldens(args) -> int:
    from .goldens import compute_goldens, format_goldens

    atomic_write(args.out, format_goldens(compute_goldens()))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_embedding_flags(p):
    p.add_argument("--method", choices=["td", "hd", "id", "pc"], default="td",
                   type=str.lower)
    p.add_argument("--m", type=int, help="dimension / derivative order")
    p.add_argument("--tau", type=int, help="delay in samples (TD)")
    p.add_argument("--delta", type=int, help="difference step in samples (HD/ID)")
    p.add_argument("--k", type=int, help="principal components kept (PC)")
    p.add_argument("--auto", action="store_true",
                   help="estimate m and tau per channel from the data")
    p.add_argument("--patch", type=int, default=16)
    p.add_argument("--stride", type=int, default=8)
    p.add_argument("--padding", default="left-zero",
                   choices=["left-zero", "right-zero", "left-repeat", "right-repeat"])
    p.add_argument("--strategy", default="ci", choices=["ci", "cd"], type=str.lower)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasembed",
                                     description="Physics-guided phase-space embeddings for time series.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic series as CSV")
    g.add_argument("--system", required=True, choices=["sine", "lorenz", "rossler", "mackey-glass"])
    g.add_argument("--dt", type=float, default=None)
    g.add_argument("--len", type=int, default=1000)
    g.add_argument("--seed", type=int)
    g.add_argument("--snr-db", type=float)
    g.add_argument("--omega", type=float, default=1.0)
    g.add_argument("--amplitude", type=float, default=1.0)
    g.add_argument("--phase", type=float, default=0.0)
    g.add_argument("--sigma", type=float, default=10.0)
    g.add_argument("--rho", type=float, default=28.0)
    g.add_argument("--beta", type=float, default=8.0 / 3.0)
    g.add_argument("--a", type=float, default=0.2)
    g.add_argument("--b", type=float, default=0.2)
    g.add_argument("--c", type=float, default=5.7)
    g.add_argument("--tau-mg", type=float, default=17.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="dynamical diagnostics as JSON")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--dt", type=float, help="sampling interval when the CSV has no t column")
    a.add_argument("--mi-threshold", type=float, default=dynamics.CD_MI_THRESHOLD)
    a.add_argument("--lle-spread", type=float, default=dynamics.CD_LLE_SPREAD)
    a.add_argument("--bins", type=int, default=dynamics.MI_BINS)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("embed", help="embed and tokenize a series")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--dt", type=float)
    _add_embedding_flags(e)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_embed)

    b = sub.add_parser("bench", help="ridge forecast vs persistence, optional dimension sweep")
    b.add_argument("--in", dest="input", required=True)
    b.add_argument("--dt", type=float)
    _add_embedding_flags(b)
    b.add_argument("--channel", type=int, default=0)
    b.add_argument("--horizon", type=int, default=5)
    b.add_argument("--lambda", dest="lam", type=float, default=experiments.DEFAULT_LAMBDA)
    b.add_argument("--split", type=float, default=experiments.DEFAULT_SPLIT)
    b.add_argument("--dims", type=_int_list)
    b.add_argument("--seed", type=int)
    b.add_argument("--sweep-out")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run the theory checks")
    v.add_argument("--suite", choices=["similarity", "lyapunov", "all"], default="all")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int)
    v.add_argument("--inject-singular", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    mg = sub.add_parser("make-goldens", help="regenerate the golden-number file")
    mg.add_argument("--out", required=True)
    mg.set_defaults(func=cmd_make_goldens)
    return parser


_DEFAULT_DT = {"sine": 1.0, "lorenz": 0.01, "rossler": 0.05, "mackey-glass": 1.0}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.command == "generate" and args.dt is None:
        args.dt = _DEFAULT_DT[args.system]
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = lambda msg, cat, *rest, **kw: print(
            f"warning: {msg}", file=sys.stderr)
        try:
            return args.func(args)
        except CommandError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return exc.code
        except (ParseError, NonFiniteError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except DivergedError as exc:
            print(f"error: numerical divergence: {exc}", file=sys.stderr)
            return EXIT_DIVERGED
        except TooShortError as exc:
            print(f"error: data too short: {exc}", file=sys.stderr)
            return EXIT_SHORT
        except (BadConfigError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
