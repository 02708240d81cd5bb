"""Command-line front end: ``fxstrings <command> [options]``.

Every command reads tick CSV (``--input``, ``-`` for stdin), runs one
pipeline and writes a plot-ready table to ``--output`` (stdout by default).
Exit codes: 0 success, 2 usage, 3 data error, 4 numeric failure; errors are
reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .brane import brane_2d
from .errors import DataError, FxStringsError, InvalidParams, NumericError
from .export import (
    BRANE_COLUMNS,
    SCATTER_COLUMNS,
    STRING_COLUMNS,
    Table,
    corrsum_table,
    dft_table,
    polarization_table,
    profile_table,
    rotation_table,
    series_table,
    sweep_table,
)
from .gateaux import PsiField, PsiKind, gateaux_series, verify
from .ingest import (
    DEFAULT_DECIMATION,
    DEFAULT_GRID_STEP,
    ColumnMap,
    TickSeries,
    decimate,
    parse_ticks,
    resample_grid,
    write_ticks,
)
from .maps import Channel, StringConfig, Topology, evaluate, window_starts
from .polarization import (
    correlation_sum,
    default_epsilon_grid,
    fractal_dimension,
    polarization_series,
)
from .rotation import align_grids, rotation_series, spread_rotation_series
from .stats import (
    buy_condition,
    intra_string_profile,
    mean_fourier_modes,
    midpoint_sweep,
    volatility_amplitude_scatter,
)

log = logging.getLogger("fxstrings")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def parse_lengths(text: str) -> list[int]:
    """``lo:hi:logN`` (N log-spaced integer lengths) or ``a,b,c``."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            if not n.startswith("log"):
                raise ValueError
            n = int(n[3:])
            lo, hi = int(lo), int(hi)
            if n < 1 or lo < 2 or hi < lo:
                raise ValueError
            grid = np.round(np.geomspace(lo, hi, n)).astype(np.int64)
            return sorted(set(int(x) for x in grid))
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad length grid {text!r}; use lo:hi:logN or a,b,c")
    if not out or min(out) < 2:
        raise argparse.ArgumentTypeError("lengths must be integers >= 2")
    return out


def _int_tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_io(p: argparse.ArgumentParser, second: bool = False):
    p.add_argument("--input", "-i", default="-", help="tick CSV path, .gz allowed; - for stdin")
    if second:
        p.add_argument("--input-j", help="second pair's tick CSV")
    p.add_argument("--columns", default="t,ask,bid", help="column order, e.g. t,bid,ask")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--pair", default="")
    p.add_argument("--skip-invalid", action="store_true", help="drop malformed lines instead of failing")
    p.add_argument("--decimate", type=int, default=DEFAULT_DECIMATION,
                   help="keep every n-th tick (1 disables; default %(default)s)")


def _add_string(p: argparse.ArgumentParser, l_s: int | None = 100, q: float = 1.0):
    p.add_argument("--topology", default=Topology.TWO_END.value,
                   choices=[t.value for t in Topology])
    p.add_argument("--q", type=float, default=q)
    if l_s is not None:
        p.add_argument("--l-s", type=int, default=l_s, dest="l_s")
    p.add_argument("--channel", default=Channel.PLAIN.value, choices=[c.value for c in Channel])
    p.add_argument("--n-m", type=int, default=1, dest="n_m", help="compactification copies")
    p.add_argument("--eta", type=float, default=0.0, help="homotopy parameter")
    p.add_argument("--q2", type=float, default=None, help="2-end deformation in the homotopy")
    p.add_argument("--scales", type=_int_tuple, default=(), help="multi-scale lengths")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--output", "-o", default="-", help="output path; - for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--manifest", help="write a JSON record of config and input digests here")
    p.add_argument("--verbose", "-v", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fxstrings", description="String maps of FX tick data")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", help="one string (or brane) state")
    _add_io(p); _add_string(p); _add_common(p)
    p.add_argument("--tau", type=int, default=0)
    p.add_argument("--brane", action="store_true", help="ask/bid brane instead of a string")

    p = sub.add_parser("sweep", help="midpoint mean and dispersion over string lengths")
    _add_io(p); _add_string(p, l_s=None, q=6.0); _add_common(p)
    p.add_argument("--lengths", type=parse_lengths, default=parse_lengths("100:10000:log16"))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--bootstrap", type=int, default=0, help="resamples for confidence intervals")

    p = sub.add_parser("profile", help="per-h mean and dispersion")
    _add_io(p); _add_string(p); _add_common(p)
    p.add_argument("--condition", choices=("none", "buy"), default="none")

    p = sub.add_parser("volat", help="return volatility against midpoint amplitude")
    _add_io(p); _add_string(p); _add_common(p)
    p.add_argument("--normalize", action="store_true", help="divide the return sums by L")

    p = sub.add_parser("dft", help="window-averaged Fourier modes")
    _add_io(p); _add_string(p); _add_common(p)
    p.add_argument("--k-max", type=int, default=14)
    p.add_argument("--condition", choices=("none", "buy"), default="none")

    p = sub.add_parser("polarize", help="polarization ratio per window")
    _add_io(p); _add_string(p); _add_common(p)

    p = sub.add_parser("corrsum", help="correlation sum of polarized distances")
    _add_io(p); _add_string(p); _add_common(p)
    p.add_argument("--points", type=int, default=64, help="epsilon grid size")
    p.add_argument("--fit-lo", type=float)
    p.add_argument("--fit-hi", type=float)

    p = sub.add_parser("rotate", help="distance and angular momentum between two strings")
    _add_io(p, second=True); _add_common(p)
    p.add_argument("--l-s", type=int, default=360, dest="l_s")
    p.add_argument("--q", type=float, default=6.0)
    p.add_argument("--grid-step", type=float, default=DEFAULT_GRID_STEP)
    p.add_argument("--time-unit", type=float, default=3600.0, help="seconds per alpha time unit")

    p = sub.add_parser("gateaux", help="directional derivative series or verifier report")
    _add_io(p, second=True); _add_common(p)
    p.add_argument("--kind", choices=(Topology.ONE_END.value, Topology.TWO_END.value),
                   default=Topology.TWO_END.value)
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--l-s", type=int, default=360, dest="l_s")
    p.add_argument("--h", type=int, default=None, help="default l_s // 2")
    p.add_argument("--psi", choices=[k.value for k in PsiKind], default=PsiKind.UNIT.value)
    p.add_argument("--period", type=float)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--grid-step", type=float, default=DEFAULT_GRID_STEP)
    p.add_argument("--verify-tau", type=int, default=None,
                   help="emit a finite-difference report for this window instead")

    p = sub.add_parser("synth", help="synthetic tick series")
    p.add_argument("--model", choices=("lnlinear", "cos", "gbm"), required=True)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--p0", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.0, help="lnlinear drift per step")
    p.add_argument("--a1", type=float, default=1.0)
    p.add_argument("--a2", type=float, default=0.01)
    p.add_argument("--omega", type=float, default=0.01)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1e-4)
    p.add_argument("--spread", type=float, default=0.0, help="ask - bid, centred on the mid")
    p.add_argument("--t0", type=int, default=0, help="first timestamp, ms")
    p.add_argument("--dt-ms", type=int, default=1000)
    p.add_argument("--output", "-o", default="-")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--manifest")
    p.add_argument("--verbose", "-v", action="store_true")
    return ap


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def synth(model: str, n: int, seed: int = 0, p0: float = 1.0, b: float = 0.0,
          a1: float = 1.0, a2: float = 0.01, omega: float = 0.01, mu: float = 0.0,
          sigma: float = 1e-4, spread: float = 0.0, t0: int = 0, dt_ms: int = 1000,
          pair: str = "SYN") -> TickSeries:
    """Deterministic synthetic ticks; bid = ask = mid unless ``spread`` > 0."""
    if n < 2:
        raise InvalidParams("n must be at least 2", n=n)
    if dt_ms < 1 or spread < 0:
        raise InvalidParams("dt_ms must be >= 1 and spread >= 0")
    tau = np.arange(n, dtype=np.float64)
    if model == "lnlinear":
        if not p0 > 0:
            raise InvalidParams("p0 must be positive")
        mid = p0 * np.exp(b * tau)
    elif model == "cos":
        if not a1 > a2 >= 0:
            raise InvalidParams("cos model needs a1 > a2 >= 0", a1=a1, a2=a2)
        mid = a1 + a2 * np.cos(omega * tau)
    elif model == "gbm":
        if not (p0 > 0 and sigma >= 0):
            raise InvalidParams("gbm needs p0 > 0 and sigma >= 0")
        rng = np.random.default_rng(seed)
        steps = (mu - 0.5 * sigma ** 2) + sigma * rng.standard_normal(n - 1)
        mid = p0 * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))
    else:
        raise InvalidParams(f"unknown model {model!r}")
    ask, bid = mid + spread / 2.0, mid - spread / 2.0
    if spread > 0 and not np.all(bid > 0):
        raise InvalidParams("spread too wide: bid prices would be non-positive")
    t = t0 + dt_ms * np.arange(n, dtype=np.int64)
    return TickSeries(t, ask, bid, pair)


def _read_source(path: str, stdin) -> bytes:
    if path == "-":
        data = stdin.buffer.read() if hasattr(stdin, "buffer") else stdin.read()
        return data.encode() if isinstance(data, str) else data
    f = Path(path)
    if not f.is_file():
        raise DataError(f"input file not found: {path}", file=path)
    return f.read_bytes()


class Context:
    """Per-run state: parsed args, raw input bytes and their digests."""

    def __init__(self, args, stdin):
        self.args = args
        self.stdin = stdin
        self.digests = {}

    def load(self, path: str, decimated: bool = True) -> TickSeries:
        a = self.args
        raw = _read_source(path, self.stdin)
        self.digests[path] = hashlib.sha256(raw).hexdigest()
        cols = replace(ColumnMap.parse(a.columns), delimiter=a.delimiter)
        try:
            series = parse_ticks(raw, cols, a.pair, a.skip_invalid)
        except FxStringsError as e:
            e.context.setdefault("file", path)
            raise
        log.info("read %d ticks from %s", len(series), path)
        if decimated and a.decimate > 1:
            series = decimate(series, a.decimate)
        return series

    def config(self, l_s=None) -> StringConfig:
        a = self.args
        return StringConfig(topology=Topology(a.topology), q=a.q,
                            l_s=l_s if l_s is not None else a.l_s,
                            channel=Channel(a.channel), n_m=a.n_m, eta=a.eta,
                            scales=tuple(a.scales), q2=a.q2)


def _condition(ctx, ticks, cfg):
    if ctx.args.condition != "buy":
        return None
    taus = window_starts(len(ticks), cfg, ctx.args.stride)
    return buy_condition(ticks.ask, ticks.bid, taus, cfg.l_s)


def cmd_map(ctx):
    a = ctx.args
    ticks = ctx.load(a.input)
    cfg = ctx.config()
    if a.brane:
        br = brane_2d(ticks.ask, ticks.bid, a.tau, cfg.l_s, cfg.q)
        h1, h2 = np.meshgrid(np.arange(cfg.l_s + 1), np.arange(cfg.l_s + 1), indexing="ij")
        return Table.from_columns(BRANE_COLUMNS, [h1.ravel(), h2.ravel(), br.values.ravel()])
    st = evaluate(cfg, a.tau, ask=ticks.ask, bid=ticks.bid)
    meta = {"tau": a.tau, "t": int(ticks.t[a.tau])}
    return Table.from_columns(STRING_COLUMNS, [np.arange(cfg.l_s + 1), st.values], meta)


def cmd_sweep(ctx):
    a = ctx.args
    ticks = ctx.load(a.input)
    cfg = ctx.config(l_s=a.lengths[0])
    res = midpoint_sweep(ticks, a.lengths, cfg, a.stride, workers=a.workers,
                         bootstrap=a.bootstrap, seed=a.seed)
    return sweep_table(res)


def cmd_profile(ctx):
    ticks = ctx.load(ctx.args.input)
    cfg = ctx.config()
    return profile_table(intra_string_profile(ticks, cfg, ctx.args.stride,
                                              _condition(ctx, ticks, cfg)))


def cmd_volat(ctx):
    ticks = ctx.load(ctx.args.input)
    sigma, amp = volatility_amplitude_scatter(ticks, ctx.config(), ctx.args.stride,
                                              ctx.args.normalize)
    return Table.from_columns(SCATTER_COLUMNS, [sigma, amp])


def cmd_dft(ctx):
    ticks = ctx.load(ctx.args.input)
    cfg = ctx.config()
    modes = mean_fourier_modes(ticks, cfg, ctx.args.stride, ctx.args.k_max,
                               _condition(ctx, ticks, cfg))
    return dft_table(modes)


def _polarize(ctx):
    ticks = ctx.load(ctx.args.input)
    return polarization_series(ticks.ask, ticks.bid, ctx.config(), ctx.args.stride, ticks.t)


def cmd_polarize(ctx):
    return polarization_table(_polarize(ctx))


def cmd_corrsum(ctx):
    a = ctx.args
    ps = _polarize(ctx)
    cs = correlation_sum(ps.distance, default_epsilon_grid(ps.distance, a.points))
    fit = None
    if a.fit_lo is not None or a.fit_hi is not None:
        lo = a.fit_lo if a.fit_lo is not None else float(cs.epsilon[0])
        hi = a.fit_hi if a.fit_hi is not None else float(cs.epsilon[-1])
        fit = fractal_dimension(cs.epsilon, cs.C, lo, hi)
    return corrsum_table(cs, fit)


def cmd_rotate(ctx):
    a = ctx.args
    gi = resample_grid(ctx.load(a.input, decimated=False), a.grid_step)
    if a.input_j:
        gj = resample_grid(ctx.load(a.input_j, decimated=False), a.grid_step)
        gi, gj = align_grids(gi, gj)
        rs = rotation_series(gi, gj, a.l_s, a.q, a.stride)
    else:
        rs = spread_rotation_series(gi, a.l_s, a.q, a.stride)
    return rotation_table(rs, a.time_unit)


def cmd_gateaux(ctx):
    a = ctx.args
    grid = resample_grid(ctx.load(a.input, decimated=False), a.grid_step)
    kind = PsiKind(a.psi)
    companion = None
    if a.input_j:
        gj = resample_grid(ctx.load(a.input_j, decimated=False), a.grid_step)
        grid, gj = align_grids(grid, gj)
        companion = gj.mid
        kind = PsiKind.SERIES_DIRECTED
    elif kind is PsiKind.SERIES_DIRECTED:
        raise UsageError("--psi series needs --input-j")
    field = PsiField(kind, amplitude=a.amplitude, period=a.period, phase=a.phase,
                     lag=a.l_s, companion=companion)
    p = grid.mid
    psi = field.values(len(p), grid.ask, grid.bid)
    if a.verify_tau is not None:
        h = a.l_s // 2 if a.h is None else a.h
        rep = verify(a.kind, p, psi, a.verify_tau, h, a.l_s, a.order)
        return rep.to_dict()
    taus, vals = gateaux_series(a.kind, p, psi, a.l_s, a.order, a.stride, a.h)
    return series_table(grid.t[taus], vals, {"psi": kind.value, "order": a.order})


def cmd_synth(ctx):
    a = ctx.args
    return synth(a.model, a.n, a.seed, a.p0, a.b, a.a1, a.a2, a.omega, a.mu, a.sigma,
                 a.spread, a.t0, a.dt_ms)


COMMANDS = {
    "map": cmd_map, "sweep": cmd_sweep, "profile": cmd_profile, "volat": cmd_volat,
    "dft": cmd_dft, "polarize": cmd_polarize, "corrsum": cmd_corrsum,
    "rotate": cmd_rotate, "gateaux": cmd_gateaux, "synth": cmd_synth,
}


def _render(result, fmt: str) -> str:
    buf = io.StringIO()
    if isinstance(result, TickSeries):
        write_ticks(result, buf)
    elif isinstance(result, Table):
        result.write(buf, fmt)
    else:
        buf.write(json.dumps(result, sort_keys=True) + "\n")
    return buf.getvalue()


def _manifest(args, ctx, out_text: str) -> dict:
    cfg = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items()}
    return {"version": __version__, "config": cfg,
            "inputs": {k: {"sha256": v} for k, v in sorted(ctx.digests.items())},
            "output": {"path": args.output,
                       "sha256": hashlib.sha256(out_text.encode()).hexdigest()}}


def _fail(stderr, code: int, payload: dict) -> int:
    stderr.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    return code


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        return _fail(stderr, EXIT_USAGE, {"error": "UsageError", "message": str(e)})
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=stderr, format="%(levelname)s %(message)s")
    ctx = Context(args, stdin)
    try:
        if hasattr(args, "topology"):
            ctx.config(getattr(args, "l_s", None) or args.lengths[0])  # validate flags first
        result = COMMANDS[args.command](ctx)
        text = _render(result, getattr(args, "format", "csv"))
    except UsageError as e:
        return _fail(stderr, EXIT_USAGE, {"error": "UsageError", "message": str(e)})
    except InvalidParams as e:
        return _fail(stderr, EXIT_USAGE, e.to_dict())
    except NumericError as e:
        return _fail(stderr, EXIT_NUMERIC, e.to_dict())
    except DataError as e:
        return _fail(stderr, EXIT_DATA, e.to_dict())
    except (ValueError, TypeError) as e:
        # StringConfig validation and friends
        return _fail(stderr, EXIT_USAGE, {"error": type(e).__name__, "message": str(e)})
    except (ArithmeticError, FloatingPointError) as e:
        return _fail(stderr, EXIT_NUMERIC, {"error": type(e).__name__, "message": str(e)})
    if args.output == "-":
        stdout.write(text)
    else:
        Path(args.output).write_text(text)
    if args.manifest:
        Path(args.manifest).write_text(
            json.dumps(_manifest(args, ctx, text), sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def main(argv=None) -> None:
    try:
        code = run(argv)
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stdout = None
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main()
