#!/usr/bin/env python3
"""Regenerates data/sample: three report tables and the provider fixtures
that let `epiforge run-all --offline` run end to end.

The corpus is synthetic. It exercises every cleaning rule, a cross-file
duplicate, rejected rows, a 53-week year and two rows (Peru 2015, Venezuela
2016) whose weather fixtures are deliberately absent.
"""
import csv
import datetime as dt
import io
import json
import pathlib
import random
import re
from zoneinfo import ZoneInfo

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "sample"

COUNTRIES = {
    "Cuba": (21.5218, -77.7812, "America/Havana", 11_379),
    "Haiti": (18.97, -72.28, "America/Port-au-Prince", 10_604),
    "Dominican Republic": (18.7357, -70.1627, "America/Santo_Domingo", 10_500),
    "Mexico": (23.6345, -102.5528, "America/Mexico_City", 121_000),
    "Colombia": (4.5709, -74.2973, "America/Bogota", 48_930),
    "Puerto Rico": (18.2208, -66.5901, "America/Puerto_Rico", 3_620),
    "Brazil": (-14.235, -51.9253, "America/Sao_Paulo", 204_000),
    "Peru": (-9.19, -75.0152, "America/Lima", 31_150),
    "Venezuela": (6.4238, -66.5897, "America/Caracas", 30_690),
}

SUMMARIES = [
    "Humid and Mostly Cloudy",
    "Humid and Partly Cloudy",
    "Humid and Overcast",
    "Mostly Cloudy",
    "Partly Cloudy",
    "Clear",
]

# (country as printed in the report, week cell, suspected, confirmed,
#  imported, deaths, include incidence?)
FILE_2014 = [
    ("Cuba*", "WEEK 10", "12", "3", "3", "0", True),
    ("Cuba", "Week 20", "40", "9", "", "0", True),
    (" Haiti#^ ", "Week52", "1,250", "14", "0", "1", True),
    ("Haiti", "WEEK 30", "9,800", "21", "", "", True),
    ("Dominican Republicg", "Week 23", "15,800", "84", "0", "6", True),
    ("Dominican Republic(1)", "WEEK 40", "20,410", "110", "0", "4", True),
    ("Mexico (2)", "Week 44", "120", "35", "31", "0", True),
    ("Mexico", "Week 50", "310", "155", "47", "0", True),
    ("Colombia", "Week 37", "4,400", "90", "2", "0", True),
    ("Colombia&", "Week 48", "68,000", "300", "", "0", True),
    ("Puerto Rico?", "WEek 26", "1,800", "1,100", "0", "6", True),
    ("Puerto Rico", "Week 33", "3,900", "2,400", "0", "11", True),
    ("Brazil$", "Week 41", "600", "290", "39", "0", True),
    ("Brazil", "Week 52", "2,700", "2,100", "40", "0", True),
    ("Brazil/", "Week 15", "0", "0", "0", "0", False),
    ("Cuba (^)", "Week 35", "70", "12", "5", "0", True),
    ("Haiti()", "Week 5", "450", "3", "0", "0", True),
]
REJECTS_2014 = [
    ("Mexico", "Week 12", "40", "", "1", "0", True),          # MissingConfirmed
    ("Colombia", "Week 60", "10", "2", "0", "0", True),       # WeekOutOfRange
    ("#^", "Week 9", "5", "1", "0", "0", True),                # EmptyCountry
]

FILE_2015 = [
    ("Cuba", "Week 20", "55", "11", "2", "0", True),
    ("Cuba", "Week 53", "18", "4", "1", "0", True),
    ("Haiti", "Week 8", "380", "0", "", "", True),
    ("Haiti>", "Week 27", "210", "2", "0", "0", True),
    ("Dominican Republic", "Week 6", "2,100", "40", "0", "1", True),
    ("Dominican Republic", "Week 30", "1,050", "30", "0", "0", True),
    ("Mexico", "Week 25", "3,400", "2,200", "0", "0", True),
    ("Mexico", "Week 40", "6,800", "4,900", "0", "0", True),
    ("Colombia", "Week 10", "250,000", "1,800", "0", "31", True),
    ("Colombia", "Week 45", "330,000", "2,900", "", "70", True),
    ("Puerto Rico", "Week 12", "500", "280", "0", "0", False),
    ("Brazil", "Week 18", "17,000", "7,600", "0", "1", True),
    ("Brazil", "Week 49", "36,000", "21,000", "0", "3", True),
    ("Peru", "Week 34", "410", "120", "30", "0", True),
    ("Cuba", "Week 44", "80", "15", "2", "0", True),
    ("Mexico", "Week 2", "1,200", "850", "0", "0", True),
    ("Haiti", "Week 45", "640", "6", "0", "0", True),
]
REJECTS_2015 = [
    ("Haiti", "", "12", "3", "0", "0", True),                  # MissingWeek
    ("Brazil", "Week 21", "n/a", "4", "0", "0", True),         # UnparseableNumber
]

FILE_2016 = [
    # (year, country, week, ...)
    (2016, "Cuba", "Week 3", "22", "5", "0", "0", True),
    (2016, "Haiti", "Week 10", "120", "1", "0", "0", True),
    (2016, "Dominican Republic", "Week 14", "600", "12", "0", "0", True),
    (2016, "Mexico", "Week 20", "2,900", "1,300", "0", "0", True),
    (2016, "Colombia", "Week 8", "12,000", "400", "0", "2", True),
    (2016, "Colombia", "Week 30", "7,500", "260", "", "1", True),
    (2016, "Puerto Rico", "Week 22", "90", "40", "0", "0", True),
    (2016, "Brazil", "Week 11", "97,000", "38,000", "0", "60", True),
    (2016, "Brazil", "Week 36", "163,000", "80,000", "0", "120", True),
    (2016, "Venezuela", "Week 6", "1,800", "22", "0", "0", True),
    (2016, "Mexico", "Week 51", "640", "300", "0", "0", True),
    (2016, "Dominican Republic", "Week 47", "330", "8", "0", "0", True),
    (2016, "Haiti", "Week 35", "60", "0", "0", "0", False),
    (2016, "Cuba", "Week 52", "30", "9", "0", "0", True),
    (2016, "Puerto Rico", "Week 45", "30", "25", "0", "0", True),
    (2016, "Colombia", "Week 50", "4,100", "150", "0", "0", True),
    # Correction of a 2015 row: later file name wins on dedupe.
    (2015, "Mexico", "Week 25", "3,500", "2,250", "0", "0", True),
]
REJECTS_2016 = [
    (2016, "Brazil", "Week 40", "", "5", "0", "0", True),      # MissingSuspected
]

HEADER = ["Country", "Epidemiological Weeks", "Suspected Cases", "Confirmed Cases",
          "Imported Cases", "Deaths", "Incidence Rate", "Population X 1000"]

WEEKLESS = re.compile(r"[A-Za-z]")


def clean_name(raw):
    for token in [">", "*", "(1)", "(2)", "(^)", "()", "#", "^", "?", "$", "/", "&"]:
        raw = raw.replace(token, "")
    return raw.strip().rstrip("g")


def incidence(suspected, confirmed, population_k):
    cases = int(suspected.replace(",", "")) + int(confirmed.replace(",", ""))
    return f"{cases / (population_k * 1000) * 100000:.2f}"


def row_cells(country, week, s, c, imp, d, with_rate):
    pop = COUNTRIES[clean_name(country) or "Cuba"][3]
    rate = incidence(s, c, pop) if with_rate and s and c and s != "n/a" else ""
    return [country, week, s, c, imp, d, rate, f"{pop:,}"]


def write_report(path, header, rows, preamble=(), footer=()):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for line in preamble:
        buf.write(line + "\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    for line in footer:
        buf.write(line + "\n")
    path.write_text(buf.getvalue())


def monday(year, week):
    return dt.date.fromisocalendar(year, week, 1)


def utc_midnight(day):
    return int(dt.datetime(day.year, day.month, day.day, tzinfo=dt.timezone.utc).timestamp())


def local_midnight(day, zone):
    return int(dt.datetime(day.year, day.month, day.day, tzinfo=ZoneInfo(zone)).timestamp())


def coord(x):
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


def slug(name):
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


def dump(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def main():
    reports = ROOT / "reports"
    fixtures = ROOT / "fixtures"
    for d in (reports, fixtures):
        if d.exists():
            for f in sorted(d.rglob("*"), reverse=True):
                f.unlink() if f.is_file() else f.rmdir()
        d.mkdir(parents=True, exist_ok=True)

    write_report(reports / "paho_chikv_2014.csv", HEADER,
                 [row_cells(*r) for r in FILE_2014 + REJECTS_2014],
                 footer=["", "Notes: cumulative cases reported to PAHO/WHO",
                         "Data source: Cases reported by IHR NFPs to PAHO/WHO"])
    write_report(reports / "paho_chikv_2015.csv", [h.upper() for h in HEADER],
                 [row_cells(*r) for r in FILE_2015 + REJECTS_2015])
    write_report(reports / "paho_chikv_2016.csv", ["Year"] + HEADER,
                 [[str(r[0])] + row_cells(*r[1:]) for r in FILE_2016 + REJECTS_2016],
                 footer=["Total,,,,,,,"])

    keys = set()
    for year, rows in ((2014, FILE_2014), (2015, FILE_2015)):
        for r in rows:
            keys.add((clean_name(r[0]), year, int(WEEKLESS.sub("", r[1]))))
    for r in FILE_2016:
        keys.add((clean_name(r[1]), r[0], int(WEEKLESS.sub("", r[2]))))
    assert len(keys) == 50, len(keys)

    rng = random.Random(2024)
    for name, (lat, lon, zone, _) in COUNTRIES.items():
        dump(fixtures / "geocode" / f"{slug(name)}.json", {
            "results": [{"formatted_address": name,
                         "geometry": {"location": {"lat": lat, "lng": lon}}}],
            "status": "OK"})

    gaps = {("Peru", 2015, 34), ("Venezuela", 2016, 6)}
    for country, year, week in sorted(keys):
        lat, lon, zone, _ = COUNTRIES[country]
        day = monday(year, week)
        utc = utc_midnight(day)
        dump(fixtures / "timezone" / f"{coord(lat)}_{coord(lon)}_{utc}.json",
             {"dstOffset": 0, "rawOffset": 0, "status": "OK", "timeZoneId": zone,
              "timeZoneName": zone})
        if (country, year, week) in gaps:
            continue
        local = local_midnight(day, zone)
        if (country, year, week) == ("Cuba", 2015, 20):
            currently = {"time": local, "summary": "Humid and Mostly Cloudy",
                         "temperature": 77.5, "dewPoint": 71.2, "humidity": 0.81,
                         "pressure": 1013.2, "windSpeed": 6.3}
        else:
            tropical = 1.0 - abs(lat) / 40.0
            temperature = round(62 + 24 * tropical + rng.uniform(-4, 4), 2)
            humidity = round(min(0.97, 0.55 + 0.35 * tropical + rng.uniform(-0.08, 0.08)), 2)
            currently = {"time": local,
                         "summary": rng.choice(SUMMARIES),
                         "temperature": temperature,
                         "dewPoint": round(temperature - (1 - humidity) * 36, 2),
                         "humidity": humidity,
                         "pressure": round(rng.uniform(1006, 1018), 2),
                         "windSpeed": round(rng.uniform(1.5, 14), 2)}
        dump(fixtures / "weather" / f"{coord(lat)}_{coord(lon)}_{local}.json",
             {"latitude": lat, "longitude": lon, "timezone": zone, "currently": currently,
              "offset": 0})


if __name__ == "__main__":
    main()
