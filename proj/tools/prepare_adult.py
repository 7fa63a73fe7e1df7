"""Rebuild a raw (categorical) UCI Adult CSV from the one-hot copy shipped in the
ethicml wheel.

The UCI archive is not always reachable; ethicml bundles the combined
train+test table (rows containing '?' removed, categoricals one-hot encoded).
This script inverts the one-hot encoding so the C++ loader can perform its own
dichotomization.

    pip download --no-deps ethicml==1.3.0 -d /tmp/ethicml
    python3 tools/prepare_adult.py /tmp/ethicml/ethicml-1.3.0-py3-none-any.whl data/adult.csv
"""

import csv
import io
import sys
import zipfile

CATEGORICAL = [
    "workclass",
    "education",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "native-country",
]
NUMERIC = ["age", "fnlwgt", "education-num", "capital-gain", "capital-loss", "hours-per-week"]
ORDER = [
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country",
]


def main(wheel: str, out: str) -> None:
    with zipfile.ZipFile(wheel) as whl:
        inner = zipfile.ZipFile(io.BytesIO(whl.read("ethicml/data/csvs/adult.csv.zip")))
        text = inner.read(inner.namelist()[0]).decode()
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    prefix = {c: [(i, h[len(c) + 1:]) for i, h in enumerate(header) if h.startswith(c + "_")]
              for c in CATEGORICAL + ["salary"]}
    index = {h: i for i, h in enumerate(header)}
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ORDER + ["income"])
        for row in reader:
            rec = []
            for col in ORDER:
                if col in NUMERIC:
                    rec.append(row[index[col]])
                else:
                    hits = [v for i, v in prefix[col] if row[i] == "1"]
                    if len(hits) != 1:
                        raise SystemExit(f"row without unique {col}: {row[:6]}")
                    rec.append(hits[0])
            income = [v for i, v in prefix["salary"] if row[i] == "1"]
            rec.append("1" if income == [">50K"] else "0")
            w.writerow(rec)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
