"""``wageshare`` command-line front end.

Exit codes: 0 success, 2 input/validation error, 3 rank-deficient regression,
4 numerical domain error, 5 property violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import analysis, dataio, econometrics, prodfn
from .errors import (
    ConfigurationError,
    DomainError,
    FetchError,
    IngestError,
    NumericError,
    SingularityError,
    ValidationError,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RANK = 3
EXIT_DOMAIN = 4
EXIT_PROPERTY = 5

log = logging.getLogger("wageshare")


class PropertyViolation(Exception):
    pass


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _existing_file(text):
    p = Path(text)
    if not p.is_file():
        raise ConfigurationError(f"file not found: {p}")
    return p


# -- subcommands ---------------------------------------------------------------------


def cmd_ingest(args):
    fred_dir = Path(args.fred_dir)
    if not fred_dir.is_dir():
        raise IngestError(f"FRED directory not found: {fred_dir}")
    klems = _existing_file(args.klems)
    jp_tfp = args.jp_tfp
    if jp_tfp is None:
        default = fred_dir / f"{dataio.JP_TFP_SERIES}.csv"
        jp_tfp = default if default.is_file() else None
    columns = dataio.KlemsColumns.from_mapping(dict(args.column or []))
    rows = dataio.build_panel(
        fred_dir, klems, countries=args.countries, columns=columns,
        jp_tfp_file=jp_tfp, strict_range=not args.allow_partial_range,
    )
    dataio.write_panel(rows, args.out)
    if args.labor_share_out:
        analysis.emit_labor_share_series(rows, args.labor_share_out, "US")
    counts = dataio.group_by_country(rows)
    for c, rs in counts.items():
        print(f"{c}\t{len(rs)}\t{rs[0].year}-{rs[-1].year}")
    print(f"wrote {len(rows)} rows for {len(counts)} countries to {args.out}")
    print(f"sha256 {dataio.panel_hash(rows)}")


def cmd_fetch(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for sid in args.series:
        path = dataio.fetch_fred(sid, directory=out)
        print(f"{sid}\t{path}")


def _fits(panel, args):
    us = econometrics.read_fit(args.us_fit) if getattr(args, "us_fit", None) else econometrics.fit_group(panel, "us")
    pool = (econometrics.read_fit(args.pool_fit) if getattr(args, "pool_fit", None)
            else econometrics.fit_group(panel, "pool"))
    return us, pool


def cmd_fit(args):
    panel = dataio.read_panel(_existing_file(args.panel))
    groups = ["us", "pool"] if args.group == "both" else [args.group]
    fits = {}
    for g in groups:
        fit = econometrics.fit_group(panel, g)
        fits["US" if g == "us" else "Others"] = fit
        if args.out_dir:
            path = Path(args.out_dir) / f"fit_{g}.json"
            econometrics.write_fit(fit, path)
            print(f"wrote {path}")
    print(econometrics.format_table(fits))


def cmd_elasticity(args):
    panel = dataio.read_panel(_existing_file(args.panel))
    us, pool = _fits(panel, args)
    records = analysis.elasticity_table(panel, analysis.fits_by_country(us, pool))
    if args.out:
        analysis.emit_figure_data(records, args.out)
    print("country\t-net\t-indirect\tci_low(-net)\tci_high(-net)\tse")
    for r in sorted(records, key=lambda r: (r.mean_net, r.country)):
        print(f"{r.country}\t{-r.mean_net:.3f}\t{-r.mean_indirect:.3f}\t{-r.ci_high:.3f}\t{-r.ci_low:.3f}\t{r.se_mean:.3f}")


def cmd_decompose(args):
    panel = dataio.read_panel(_existing_file(args.panel))
    us, pool = _fits(panel, args)
    by_country = dataio.group_by_country(panel)
    records = []
    if "US" in by_country:
        records.append(analysis.decompose_growth(by_country["US"], us.alpha1))
    pooled = [c for c in by_country if c in dataio.POOL_COUNTRIES]
    if pooled:
        records.append(analysis.decompose_pool(panel, pool.alpha1, countries=pooled))
        records.extend(analysis.decompose_growth(by_country[c], pool.alpha1) for c in pooled)
    if args.out:
        analysis.emit_figure_data(records, args.out)
    print("country\ttfp\tlabor_share\tcapital\tobserved\tresidual\tls_pct")
    for r in records:
        print(f"{r.country}\t{r.tfp_component:.5f}\t{r.labor_share_component:.5f}\t"
              f"{r.capital_deepening_component:.5f}\t{r.observed_growth:.5f}\t{r.residual:.5f}\t"
              f"{r.labor_share_pct_of_observed:.1f}%")


def _family(args, k):
    if args.family == "ces":
        if args.sigma is None:
            raise ConfigurationError("--family ces requires --sigma")
        if args.K is not None:
            return prodfn.ces_kl_family(args.K, args.L, args.sigma, args.A)
        return prodfn.ces_family(args.sigma, args.A)
    if args.family == "exp":
        return prodfn.exponential_family(args.c, args.A)
    return prodfn.constant_family(args.A)


def cmd_solve(args):
    if (args.K is None) != (args.L is None):
        raise ConfigurationError("--K and --L must be given together")
    if args.K is not None:
        if not (args.K > 0 and args.L > 0):
            raise DomainError("--K and --L must be positive")
        k = args.K / args.L
    else:
        k = args.k
    if not (k > 0 and math.isfinite(k)):
        raise DomainError(f"capital-labor ratio must be positive, got {k}")
    res = prodfn.solve_lambda_star(k, _family(args, k), args.tol)
    print(f"k\t{k:.10g}")
    print(f"lambda_star\t{res.lambda_star:.10g}")
    print(f"wage_star\t{res.wage_star:.10g}")
    print(f"interior\t{str(res.is_interior).lower()}")
    print(f"soc_satisfied\t{str(res.soc_satisfied).lower()}")
    print(f"critical_points\t{len(res.critical_points)}")
    print(f"iterations\t{res.iterations}")
    if args.alpha is not None and args.family == "ces":
        rho = (args.sigma - 1.0) / args.sigma
        lam_now = prodfn.lambda_from_alpha(args.alpha, k, rho)
        print(f"labor_share_at_alpha\t{lam_now:.10g}")


def cmd_verify_theorem(args):
    rows = []
    if args.family == "ces":
        for r in prodfn.scale_invariance_sweep(args.sigma, args.k_grid, args.scales, A=args.A):
            rows.append((r.sigma, r.k, r.scale, r.lambda_star, r.wage_star, r.lambda_deviation, r.wage_deviation))
    else:
        fam = prodfn.exponential_family(args.c, args.A)
        ref = None
        for k in args.k_grid:
            for c in args.scales:
                # Y(cK, cL) / (cL) does not involve the scale for this family
                res = prodfn.solve_lambda_star(k, fam)
                ref = ref or res
                rows.append((float("nan"), k, c, res.lambda_star, res.wage_star,
                             abs(res.lambda_star - ref.lambda_star),
                             abs(res.wage_star - ref.wage_star) / ref.wage_star))
    print("sigma\tk\tscale\tlambda_star\twage_star\tdev_lambda\tdev_wage")
    for row in rows:
        print("\t".join(f"{v:.10g}" for v in row))
    max_l = max(r[5] for r in rows)
    max_w = max(r[6] for r in rows)
    print(f"rows {len(rows)}  max lambda deviation {max_l:.3g}  max relative wage deviation {max_w:.3g}")
    if args.out:
        import csv
        import io
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("sigma", "k", "scale", "lambda_star", "wage_star", "dev_lambda", "dev_wage"))
        w.writerows([[f"{v:.10g}" for v in row] for row in rows])
        dataio.atomic_write(args.out, buf.getvalue().encode("utf-8"))
    if max_l > args.tol or max_w > args.tol:
        raise PropertyViolation(f"scale invariance violated: {max_l:.3g} / {max_w:.3g} > {args.tol:g}")


# -- parser ------------------------------------------------------------------------------


def _kv(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected FIELD=HEADER, got {text!r}")
    return key, value


def build_parser():
    ap = argparse.ArgumentParser(prog="wageshare", description="Labor share and wage toolkit.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build the canonical country-year panel")
    p.add_argument("--fred-dir", required=True, help="directory holding <SERIES_ID>.csv FRED exports")
    p.add_argument("--klems", required=True, help="KLEMS extract CSV")
    p.add_argument("--jp-tfp", help=f"FRED {dataio.JP_TFP_SERIES} export (default: looked up in --fred-dir)")
    p.add_argument("--countries", nargs="+", default=list(dataio.POOL_COUNTRIES), metavar="CODE",
                   help="non-US economies to ingest (default: all eleven)")
    p.add_argument("--column", action="append", type=_kv, metavar="FIELD=HEADER",
                   help="override a KLEMS column name, e.g. output=VA_Q (repeatable)")
    p.add_argument("--allow-partial-range", action="store_true",
                   help="accept KLEMS series that cover only part of the sample window")
    p.add_argument("--out", required=True, help="panel CSV to write")
    p.add_argument("--labor-share-out", help="also write the US labor-share series as year,labor_share CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fetch", help="download FRED series (needs FRED_API_KEY)")
    p.add_argument("--series", nargs="+", default=list(dataio.FRED_SOURCE_SERIES), metavar="ID")
    p.add_argument("--out-dir", default=".", help="target directory")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("fit", help="fit the CES regression for the US and the pooled economies")
    p.add_argument("--panel", required=True)
    p.add_argument("--group", choices=("us", "pool", "both"), default="both")
    p.add_argument("--out-dir", help="write fit_<group>.json here")
    p.set_defaults(func=cmd_fit)

    for name, func, text in (
        ("elasticity", cmd_elasticity, "country means of d ln w / d ln lambda (elasticity plot data)"),
        ("decompose", cmd_decompose, "wage-growth decomposition (growth plot data)"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--panel", required=True)
        p.add_argument("--us-fit", help="fit JSON for the US (default: fit from the panel)")
        p.add_argument("--pool-fit", help="fit JSON for the pool (default: fit from the panel)")
        p.add_argument("--out", help="figure-data CSV to write")
        p.set_defaults(func=func)

    p = sub.add_parser("solve", help="wage-maximizing labor share for one capital-labor ratio")
    p.add_argument("--family", choices=("ces", "exp", "constant"), default="ces")
    p.add_argument("--sigma", type=_positive, help="elasticity of substitution (ces)")
    p.add_argument("--k", type=float, default=1.0, help="capital-labor ratio")
    p.add_argument("--K", type=float, help="capital; with --L solves from raw inputs")
    p.add_argument("--L", type=float, help="labor")
    p.add_argument("--A", type=_positive, default=1.0, help="TFP level")
    p.add_argument("--alpha", type=float, help="CES share parameter; reports the implied labor share")
    p.add_argument("--c", type=float, default=4.0, help="decay rate of the exp family Y = A exp(-c lambda)")
    p.add_argument("--tol", type=_positive, default=prodfn.FOC_TOLERANCE, help="FOC tolerance")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify-theorem", help="check scale invariance of lambda* and w*")
    p.add_argument("--family", choices=("ces", "exp"), default="ces")
    p.add_argument("--sigma", type=_positive, nargs="+", default=[0.7, 0.92, 1.2])
    p.add_argument("--k-grid", type=_positive, nargs="+", default=[1.0, 10.0, 100.0, 1000.0])
    p.add_argument("--scales", type=_positive, nargs="+", default=[0.1, 1.0, 10.0, 100.0])
    p.add_argument("--A", type=_positive, default=1.0)
    p.add_argument("--c", type=float, default=4.0)
    p.add_argument("--tol", type=_positive, default=1e-8, help="maximum tolerated deviation")
    p.add_argument("--out", help="write the report as CSV")
    p.set_defaults(func=cmd_verify_theorem)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except SingularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANK
    except (DomainError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (IngestError, ValidationError, ConfigurationError, FetchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PropertyViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
