"""Regenerate the checked-in test fixtures from the Penn World Table 10 sample.

The FRED API and the EU KLEMS portal are unreachable from the build
environment, so the fixtures are stand-ins laid out exactly like the real
inputs (FRED ``date,value`` exports and a KLEMS extract).  They are built
from the PWT 10 sample distributed with the ``rdatasets`` package
(``stevedata/pwt_sample``: 22 OECD economies, 1950-2019).  See
``tests/fixtures/PROVENANCE.md`` for the variable mapping.

Usage::

    pip install rdatasets
    python scripts/build_fixtures.py [--out tests/fixtures]
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np
import rdatasets

ISO = {
    "USA": "US", "AUT": "AT", "BEL": "BE", "DEU": "DE", "DNK": "DK", "ESP": "ES",
    "FRA": "FR", "ITA": "IT", "JPN": "JP", "NLD": "NL", "SWE": "SE", "GBR": "UK",
}
TFP_BASE_YEAR = 2017


def tornqvist_tfp(g):
    """PWT ``rtfpna``: Tornqvist TFP with labor input emp * hc, rebased to 2017."""
    g = g.sort_values("year")
    labor = g["emp"] * g["hc"]
    s = g["labsh"]
    s_bar = 0.5 * (s + s.shift())
    dln = (np.log(g["rgdpna"]).diff() - s_bar * np.log(labor).diff()
           - (1.0 - s_bar) * np.log(g["rnna"]).diff())
    ln_tfp = dln.fillna(0.0).cumsum()
    base = ln_tfp[g["year"] == TFP_BASE_YEAR].iloc[0]
    return np.exp(ln_tfp - base)


def write_fred(path, years, values):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("date", "value"))
        for y, v in zip(years, values):
            w.writerow((f"{int(y)}-01-01", repr(float(v))))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "tests" / "fixtures", type=Path)
    args = ap.parse_args()

    pwt = rdatasets.data("stevedata", "pwt_sample")
    pwt = pwt[pwt["isocode"].isin(ISO)].copy()
    need = ["rgdpna", "labsh", "avh", "emp", "rnna", "hc"]
    pwt = pwt.dropna(subset=need)
    pwt["hours"] = pwt["emp"] * pwt["avh"]

    fred = args.out / "fred"
    fred.mkdir(parents=True, exist_ok=True)

    us = pwt[pwt["isocode"] == "USA"].sort_values("year")
    us_tfp = tornqvist_tfp(us)
    write_fred(fred / "GDPC1.csv", us["year"], us["rgdpna"] / 1000.0)
    write_fred(fred / "RTFPNAUSA632NRUG.csv", us["year"], us_tfp)
    write_fred(fred / "RKNANPUSA666NRUG.csv", us["year"], us["rnna"])
    write_fred(fred / "B4701C0A222NBEA.csv", us["year"], us["hours"])
    write_fred(fred / "LABSHPUSA156NRUG.csv", us["year"], us["labsh"])

    jp = pwt[pwt["isocode"] == "JPN"].sort_values("year")
    write_fred(fred / "RTFPNAJPA632NRUG.csv", jp["year"], tornqvist_tfp(jp))

    with open(args.out / "klems_extract.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("country", "year", "output", "hours", "capital", "labor_share", "tfp", "currency"))
        for iso in sorted(ISO, key=ISO.get):
            code = ISO[iso]
            if code == "US":
                continue
            g = pwt[pwt["isocode"] == iso].sort_values("year")
            tfp = tornqvist_tfp(g)
            g = g.assign(tfp=tfp)
            for _, r in g[g["year"] >= 1995].iterrows():
                w.writerow((
                    code, int(r["year"]), repr(float(r["rgdpna"])), repr(float(r["hours"])),
                    repr(float(r["rnna"])), repr(float(r["labsh"])),
                    "" if code == "JP" else repr(float(r["tfp"])), "USD",
                ))
            assert not math.isnan(g["tfp"].iloc[-1])
    print(f"fixtures written to {args.out}")


if __name__ == "__main__":
    main()
