"""``geostein run``: convergence sweeps from the command line.

Exit status is 0 on success, 2 on a configuration error (argparse uses 2
for malformed arguments as well) and 3 when every cell of the sweep failed.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, GeosteinError
from .experiments import (
    POINT_REGIMES,
    DEFAULT_TARGET,
    ExperimentConfig,
    dump_interpolant,
    fit_rate,
    render_svg,
    run_convergence,
    summarize,
    theoretical_slope,
)

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED = 0, 2, 3


def parse_int_list(text: str) -> tuple[int, ...]:
    """``"50,100,200"`` or an inclusive range ``"0..9"`` (the two may be mixed)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = part.split("..", 1)
                lo, hi = int(lo), int(hi)
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"cannot parse integer list {text!r}") from None
    if not out:
        raise ConfigError(f"empty integer list {text!r}")
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geostein", description="Stein kernel cubature on the sphere")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="KSD and integration-error convergence sweep")
    run.add_argument("--kernel", required=True, help="k1:alpha=3.5 | k2:alpha=5.5,lambda=1 | k3:j=2,lambda=2")
    run.add_argument("--target", default=DEFAULT_TARGET, help="vmf:c1,c2,c3 (default %(default)s)")
    run.add_argument("--points", default="fibonacci", choices=POINT_REGIMES)
    run.add_argument("--n-grid", default="50,100,200,400,800")
    run.add_argument("--n", type=int, help="single size; overrides --n-grid")
    run.add_argument("--seeds", default="0", help="comma list or inclusive range such as 0..9")
    run.add_argument("--seed", type=int, help="single seed; overrides --seeds")
    run.add_argument("--burnin", type=int, default=None, help="MH burn-in (default n/10)")
    run.add_argument("--integrand", default="rosenbrock", help="rosenbrock | linear | constant")
    run.add_argument("--sigma", type=float, default=None, help="finite-sigma estimator instead of the limit form")
    run.add_argument("--riesz-iters", type=int, default=500)
    run.add_argument("--out", required=True, help="CSV output path")
    run.add_argument("--emit-svg", metavar="PATH", help="log-log KSD plot")
    run.add_argument("--dump-interpolant", metavar="PATH", help="f and f_hat on a lat-long grid (largest n, first seed)")
    run.add_argument("--save-points", metavar="DIR", help="write every point set used")
    return p


def _config_from_args(args) -> ExperimentConfig:
    n_grid = (args.n,) if args.n is not None else parse_int_list(args.n_grid)
    seeds = (args.seed,) if args.seed is not None else parse_int_list(args.seeds)
    return ExperimentConfig(
        kernel=args.kernel,
        target=args.target,
        points=args.points,
        n_grid=n_grid,
        seeds=seeds,
        integrand=args.integrand,
        sigma=args.sigma,
        burn_in=args.burnin,
        riesz_iters=args.riesz_iters,
        output=args.out,
        points_dir=args.save_points,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _config_from_args(args)
    except (ConfigError, GeosteinError, ValueError) as exc:
        print(f"geostein: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    def progress(rec):
        status = rec.flag or "ok"
        print(f"n={rec.n:<5d} seed={rec.seed:<3d} ksd={rec.ksd:.4e} abs_error={rec.abs_error:.3e} "
              f"jitter={rec.jitter:.1e} {status} ({rec.wall_ms:.0f} ms)", flush=True)

    records = run_convergence(config, progress=progress)
    summaries = summarize(records)
    for s in summaries:
        print(f"n={s.n:<5d} mean_ksd={s.mean_ksd:.4e} stderr={s.stderr:.2e} seeds={s.count} flagged={s.flagged}")
    profile = config.profile()
    try:
        slope, _, r2 = fit_rate(records)
        print(f"fitted slope {slope:.3f} (r^2 {r2:.3f}); predicted {theoretical_slope(profile):.3f}"
              + (" (lower bound)" if profile.rate_is_lower_bound else ""))
    except GeosteinError as exc:
        print(f"no slope fitted: {exc}")

    if args.emit_svg:
        svg = render_svg(summaries, theoretical_slope(profile), title=f"{profile.spec()}, {config.points}")
        with open(args.emit_svg, "w") as fh:
            fh.write(svg)
    if args.dump_interpolant:
        try:
            dump_interpolant(args.dump_interpolant, config)
        except GeosteinError as exc:
            print(f"geostein: interpolant dump failed: {exc}", file=sys.stderr)

    if records and all(not r.ok for r in records):
        return EXIT_ALL_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
