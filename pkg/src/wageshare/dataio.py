"""Country-year panel construction from FRED and EU KLEMS extracts.

US series come from five FRED ``date,value`` exports; the other eleven
economies come from a KLEMS 2023 national-accounts extract whose column
names are configurable through :class:`KlemsColumns`.  Monetary values in
DKK, JPY, SEK and GBP are converted to euro at fixed 2015 average rates and
TFP is rebased to 1 in the first year of each country's sample.

The canonical panel file is a UTF-8 CSV with header
``country,year,output,hours,capital,tfp,labor_share`` sorted by country and
year; floats are written with ``repr`` so a read/write round trip is exact.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
import tempfile
import time
from collections import defaultdict
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    ConfigurationError,
    GapError,
    IngestError,
    PermanentFetchError,
    RetryableFetchError,
    ValidationError,
)

logger = logging.getLogger(__name__)

US_SERIES = {
    "output": "GDPC1",
    "tfp": "RTFPNAUSA632NRUG",
    "capital": "RKNANPUSA666NRUG",
    "hours": "B4701C0A222NBEA",
    "labor_share": "LABSHPUSA156NRUG",
}
JP_TFP_SERIES = "RTFPNAJPA632NRUG"
FRED_SOURCE_SERIES = tuple(US_SERIES.values()) + (JP_TFP_SERIES,)

# GDPC1 is published in billions, the capital stock in millions.
US_OUTPUT_SCALE = 1000.0

POOL_COUNTRIES = ("AT", "BE", "DE", "DK", "ES", "FR", "IT", "JP", "NL", "SE", "UK")
ALL_COUNTRIES = ("US",) + POOL_COUNTRIES
YEAR_RANGES = {"US": (1954, 2019), "JP": (1995, 2020)}
YEAR_RANGES.update({c: (1995, 2021) for c in POOL_COUNTRIES if c != "JP"})

RATES_TO_EUR = {"EUR": 1.0, "DKK": 0.13404, "JPY": 0.00744, "SEK": 0.107, "GBP": 1.3761}
PASS_THROUGH_CURRENCIES = ("USD",)
COUNTRY_CURRENCY = {"US": "USD", "DK": "DKK", "JP": "JPY", "SE": "SEK", "UK": "GBP"}
_COUNTRY_ALIASES = {"GB": "UK", "USA": "US"}

PANEL_HEADER = ("country", "year", "output", "hours", "capital", "tfp", "labor_share")


@dataclass(frozen=True)
class CurrencyRate:
    currency: str
    rate_to_eur: float


@dataclass(frozen=True)
class PanelObservation:
    """One country-year.  ``wage`` and ``k_ratio`` are always recomputed."""

    country: str
    year: int
    output: float
    hours: float
    capital: float
    tfp: float
    labor_share: float

    def __post_init__(self):
        for name in ("output", "hours", "capital", "tfp"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"{self.country} {self.year}: {name} must be positive, got {v!r}")
        if not 0.0 < self.labor_share < 1.0:
            raise ValidationError(
                f"{self.country} {self.year}: labor share must lie in (0, 1), got {self.labor_share!r}"
            )

    @property
    def wage(self) -> float:
        return self.labor_share * self.output / self.hours

    @property
    def k_ratio(self) -> float:
        return self.capital / self.hours


def normalize_country(code: str) -> str:
    code = code.strip().upper()
    return _COUNTRY_ALIASES.get(code, code)


def convert_currency(value: float, currency: str) -> float:
    """Convert a monetary amount to euro at the fixed 2015 rate.

    EUR and USD pass through unchanged (US data are analysed in native
    units in their own regression).
    """
    cur = currency.strip().upper()
    if cur in PASS_THROUGH_CURRENCIES:
        return value
    try:
        return value * RATES_TO_EUR[cur]
    except KeyError:
        raise ConfigurationError(f"unknown currency code {currency!r}") from None


def currency_rates() -> list:
    return [CurrencyRate(c, r) for c, r in RATES_TO_EUR.items()]


# -- FRED ------------------------------------------------------------------------


def read_fred_csv(path) -> dict:
    """Annual means of a FRED ``date,value`` export, keyed by year.

    Missing observations (FRED writes ``.``) are skipped.  For sub-annual
    series only years with every period present are returned, so a partial
    year shows up as a gap instead of a biased mean.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"missing FRED series file: {path}")
    by_year = defaultdict(list)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise IngestError(f"{path}: expected a two-column date,value header")
        for lineno, row in enumerate(reader, start=2):
            if not row or not row[0].strip():
                continue
            date, raw = row[0].strip(), row[1].strip()
            try:
                year = int(date[:4])
                int(date[5:7])
            except ValueError:
                raise IngestError(f"{path}:{lineno}: unparseable date {date!r}") from None
            if raw in ("", "."):
                continue
            try:
                value = float(raw)
            except ValueError:
                raise IngestError(f"{path}:{lineno}: unparseable value {raw!r}") from None
            by_year[year].append(value)
    if not by_year:
        raise IngestError(f"{path}: no observations")
    per_year = max(len(v) for v in by_year.values())
    return {y: sum(v) / len(v) for y, v in sorted(by_year.items()) if len(v) == per_year}


def _require_years(name, series, start, end):
    missing = [y for y in range(start, end + 1) if y not in series]
    if missing:
        raise GapError(f"{name}: missing years {_format_years(missing)}", missing)


def _format_years(years):
    if len(years) > 8:
        return f"{years[0]}..{years[-1]} ({len(years)} years)"
    return ", ".join(map(str, years))


def ingest_fred(directory, start: int = 1954, end: int = 2019) -> list:
    """US panel rows from the five FRED exports in ``directory``.

    Files are looked up as ``<SERIES_ID>.csv``.  Quarterly GDP is averaged
    to annual, converted from billions to millions, and TFP is rebased to
    1 in ``start``.
    """
    directory = Path(directory)
    series = {}
    for field_name, sid in US_SERIES.items():
        data = read_fred_csv(directory / f"{sid}.csv")
        _require_years(sid, data, start, end)
        series[field_name] = data
    base_tfp = series["tfp"][start]
    rows = []
    for year in range(start, end + 1):
        rows.append(
            PanelObservation(
                country="US",
                year=year,
                output=series["output"][year] * US_OUTPUT_SCALE,
                hours=series["hours"][year],
                capital=series["capital"][year],
                tfp=series["tfp"][year] / base_tfp,
                labor_share=series["labor_share"][year],
            )
        )
    return rows


# -- KLEMS -----------------------------------------------------------------------


@dataclass(frozen=True)
class KlemsColumns:
    """Header names in a KLEMS extract.  ``currency`` is optional in the file."""

    country: str = "country"
    year: str = "year"
    output: str = "output"
    hours: str = "hours"
    capital: str = "capital"
    labor_share: str = "labor_share"
    tfp: str = "tfp"
    currency: str = "currency"

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "KlemsColumns":
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ConfigurationError(f"unknown KLEMS column keys: {sorted(unknown)}")
        return cls(**mapping)


def _parse_float(text, where):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise IngestError(f"{where}: unparseable number {text!r}") from None


def ingest_klems(
    file,
    country: str,
    columns: KlemsColumns = KlemsColumns(),
    jp_tfp_file=None,
    strict_range: bool = True,
) -> list:
    """Panel rows for one non-US economy from a KLEMS extract.

    Output and capital are converted to euro using the row's ``currency``
    column when present, otherwise the country's national currency.  For
    Japan, TFP is read from the FRED series ``RTFPNAJPA632NRUG`` when
    ``jp_tfp_file`` is given.  With ``strict_range`` every year of the
    country's sample window must be present; otherwise the available years
    inside the window are used.
    """
    country = normalize_country(country)
    if country not in POOL_COUNTRIES:
        raise ConfigurationError(f"unknown KLEMS country code {country!r}")
    path = Path(file)
    if not path.is_file():
        raise IngestError(f"missing KLEMS file: {path}")
    start, end = YEAR_RANGES[country]

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        required = [columns.country, columns.year, columns.output, columns.hours,
                    columns.capital, columns.labor_share, columns.tfp]
        missing = [c for c in required if c not in header]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        has_currency = columns.currency in header
        raw = [r for r in reader if normalize_country(r[columns.country]) == country]

    jp_tfp = None
    if country == "JP" and jp_tfp_file is not None:
        jp_tfp = read_fred_csv(jp_tfp_file)

    records = {}
    for r in raw:
        where = f"{path} [{country} {r[columns.year]}]"
        year = int(_parse_float(r[columns.year], where))
        if not start <= year <= end:
            continue
        if year in records:
            raise ValidationError(f"{where}: duplicate year")
        share = _parse_float(r[columns.labor_share], where)
        if not 0.0 < share < 1.0:
            raise ValidationError(f"{where}: labor share {share!r} outside (0, 1)")
        cur = (r.get(columns.currency) or "").strip() if has_currency else ""
        cur = cur or COUNTRY_CURRENCY.get(country, "EUR")
        if jp_tfp is not None:
            if year not in jp_tfp:
                raise GapError(f"{JP_TFP_SERIES}: missing year {year}", [year])
            tfp = jp_tfp[year]
        else:
            text = r[columns.tfp].strip()
            if not text:
                raise ConfigurationError(
                    f"{where}: empty TFP; supply the {JP_TFP_SERIES} export for Japan"
                    if country == "JP" else f"{where}: empty TFP"
                )
            tfp = _parse_float(text, where)
        records[year] = dict(
            output=convert_currency(_parse_float(r[columns.output], where), cur),
            hours=_parse_float(r[columns.hours], where),
            capital=convert_currency(_parse_float(r[columns.capital], where), cur),
            tfp=tfp,
            labor_share=share,
        )

    if not records:
        raise GapError(f"{path}: no rows for {country} in {start}-{end}",
                       list(range(start, end + 1)))
    years = sorted(records)
    if strict_range:
        _require_years(f"{path} [{country}]", records, start, end)
    else:
        _require_years(f"{path} [{country}]", records, years[0], years[-1])
        if (years[0], years[-1]) != (start, end):
            logger.warning("%s: using %d-%d, sample window is %d-%d",
                           country, years[0], years[-1], start, end)
    base = records[years[0]]["tfp"]
    if not base > 0:
        raise ValidationError(f"{path} [{country} {years[0]}]: base-year TFP must be positive")
    return [
        PanelObservation(country=country, year=y, **{**records[y], "tfp": records[y]["tfp"] / base})
        for y in years
    ]


def build_panel(
    fred_dir,
    klems_file,
    countries: Sequence[str] = POOL_COUNTRIES,
    columns: KlemsColumns = KlemsColumns(),
    jp_tfp_file=None,
    strict_range: bool = True,
) -> list:
    """US rows from ``fred_dir`` plus one KLEMS ingest per pooled country, sorted."""
    rows = list(ingest_fred(fred_dir))
    for c in countries:
        rows.extend(ingest_klems(klems_file, c, columns, jp_tfp_file, strict_range))
    rows.sort(key=lambda r: (r.country, r.year))
    return rows


# -- canonical panel file --------------------------------------------------------


def validate_panel(rows: Sequence[PanelObservation]) -> None:
    if not rows:
        raise ValidationError("panel is empty")
    keys = [(r.country, r.year) for r in rows]
    for a, b in zip(keys, keys[1:]):
        if a == b:
            raise ValidationError(f"duplicate row {a[0]} {a[1]}")
        if a > b:
            raise ValidationError(f"rows not sorted by (country, year): {a} before {b}")


def panel_to_bytes(rows: Sequence[PanelObservation]) -> bytes:
    validate_panel(rows)
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PANEL_HEADER)
    for r in rows:
        w.writerow([r.country, r.year, repr(r.output), repr(r.hours), repr(r.capital),
                    repr(r.tfp), repr(r.labor_share)])
    return buf.getvalue().encode("utf-8")


def panel_hash(rows: Sequence[PanelObservation]) -> str:
    """SHA-256 of the canonical CSV encoding."""
    return hashlib.sha256(panel_to_bytes(rows)).hexdigest()


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_panel(rows: Sequence[PanelObservation], file) -> None:
    atomic_write(file, panel_to_bytes(rows))


def read_panel(file) -> list:
    path = Path(file)
    if not path.is_file():
        raise IngestError(f"missing panel file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != PANEL_HEADER:
            raise IngestError(f"{path}: expected header {','.join(PANEL_HEADER)}, got {','.join(header)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            where = f"{path}:{lineno}"
            if len(rec) != len(PANEL_HEADER):
                raise IngestError(f"{where}: expected {len(PANEL_HEADER)} fields, got {len(rec)}")
            rows.append(
                PanelObservation(
                    country=rec[0],
                    year=int(rec[1]),
                    output=_parse_float(rec[2], where),
                    hours=_parse_float(rec[3], where),
                    capital=_parse_float(rec[4], where),
                    tfp=_parse_float(rec[5], where),
                    labor_share=_parse_float(rec[6], where),
                )
            )
    validate_panel(rows)
    return rows


def group_by_country(rows: Iterable[PanelObservation]) -> dict:
    out = defaultdict(list)
    for r in rows:
        out[r.country].append(r)
    return {c: sorted(v, key=lambda r: r.year) for c, v in sorted(out.items())}


# -- FRED download client ----------------------------------------------------------

FRED_OBSERVATIONS_URL = "https://api.stlouisfed.org/fred/series/observations"


def fetch_fred(
    series_id: str,
    api_key: Optional[str] = None,
    directory=".",
    session=None,
    retries: int = 3,
    backoff: float = 1.0,
    timeout: float = 30.0,
    sleep=time.sleep,
) -> Path:
    """Download one FRED series to ``<directory>/<series_id>.csv``.

    The key defaults to ``$FRED_API_KEY``.  Connection failures and 5xx/429
    responses are retried ``retries`` times with exponential backoff; a
    400/404 answer (unknown series, invalid key) fails immediately.
    """
    import requests

    if api_key is None:
        api_key = os.environ.get("FRED_API_KEY", "")
    if not api_key or not api_key.strip():
        raise ConfigurationError("FRED API key required: set FRED_API_KEY")
    if not series_id or not series_id.strip():
        raise ConfigurationError("series_id must be non-empty")
    http = session or requests.Session()
    params = {"series_id": series_id, "api_key": api_key, "file_type": "json"}

    last = None
    for attempt in range(retries + 1):
        if attempt:
            sleep(backoff * 2 ** (attempt - 1))
        try:
            resp = http.get(FRED_OBSERVATIONS_URL, params=params, timeout=timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            last = RetryableFetchError(f"{series_id}: {exc}")
            logger.warning("FRED fetch %s failed (attempt %d): %s", series_id, attempt + 1, exc)
            continue
        if resp.status_code == 429 or resp.status_code >= 500:
            last = RetryableFetchError(f"{series_id}: HTTP {resp.status_code}")
            logger.warning("FRED fetch %s: HTTP %d (attempt %d)", series_id, resp.status_code, attempt + 1)
            continue
        if resp.status_code != 200:
            try:
                msg = resp.json().get("error_message", "")
            except ValueError:
                msg = resp.text[:200]
            raise PermanentFetchError(f"{series_id}: HTTP {resp.status_code} {msg}".rstrip())
        obs = resp.json().get("observations")
        if obs is None:
            raise PermanentFetchError(f"{series_id}: response has no observations")
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("date", "value"))
        for o in obs:
            w.writerow((o["date"], o["value"]))
        out = Path(directory) / f"{series_id}.csv"
        atomic_write(out, buf.getvalue().encode("utf-8"))
        return out
    raise last
