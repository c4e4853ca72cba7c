#!/usr/bin/env python3
"""Regenerate data/ from the copies bundled in two PyPI packages.

The UCI hosts are not always reachable, so the raw files are taken from
wheels that ship them verbatim:

  * German credit (Statlog): ``responsibly`` ships the original
    ``german.data`` (1000 rows, space separated, A11..A202 codes).
  * Telecom churn: ``rdatasets`` ships R's ``modeldata::mlc_churn`` (5000
    rows = the 3333-row training file followed by the 1667-row test file).
    That copy already dropped the phone-number column; a unique synthetic
    identifier is put back in its place so attribute numbering matches the
    original file (state=1, account length=2, area code=3, phone=4,
    international plan=5, ...).

Usage: python3 scripts/prepare_datasets.py [--out data]
"""

import argparse
import csv
import pathlib
import subprocess
import sys
import tempfile
import zipfile

GERMAN_COLUMNS = [
    ("checking_status", "nominal"),
    ("duration", "numeric"),
    ("credit_history", "nominal"),
    ("purpose", "nominal"),
    ("credit_amount", "numeric"),
    ("savings", "nominal"),
    ("employment", "nominal"),
    ("installment_rate", "numeric"),
    ("personal_status", "nominal"),
    ("other_debtors", "nominal"),
    ("residence_since", "numeric"),
    ("property", "nominal"),
    ("age", "numeric"),
    ("other_installment_plans", "nominal"),
    ("housing", "nominal"),
    ("existing_credits", "numeric"),
    ("job", "nominal"),
    ("num_dependents", "numeric"),
    ("telephone", "nominal"),
    ("foreign_worker", "nominal"),
    ("class", "target"),
]

CHURN_NOMINAL = {"state", "area_code", "international_plan", "voice_mail_plan"}


def fetch_wheel(name, workdir):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", workdir, name],
        check=True,
    )
    return next(pathlib.Path(workdir).glob(f"{name}-*.whl"))


def write_schema(path, columns, positive_label):
    with open(path, "w") as f:
        for name, kind in columns:
            f.write(f"{name} = {kind}\n")
        f.write(f"positive_label = {positive_label}\n")


def prepare_german(out, workdir):
    wheel = fetch_wheel("responsibly", workdir)
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("responsibly/dataset/german/german.data").decode()
    with open(out / "german_credit.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([c for c, _ in GERMAN_COLUMNS])
        for line in raw.splitlines():
            fields = line.split()
            if not fields:
                continue
            fields[-1] = "good" if fields[-1] == "1" else "bad"
            w.writerow(fields)
    write_schema(out / "german_credit.schema", GERMAN_COLUMNS, "good")


def prepare_churn(out, workdir):
    import pandas as pd

    wheel = fetch_wheel("rdatasets", workdir)
    with zipfile.ZipFile(wheel) as z:
        z.extract("rdatasets/_data/modeldata/mlc_churn.pkl.compress", workdir)
    df = pd.read_pickle(
        pathlib.Path(workdir) / "rdatasets/_data/modeldata/mlc_churn.pkl.compress",
        compression="xz",
    )
    df = df.drop(columns=["rownames"])
    df["area_code"] = df["area_code"].str.replace("area_code_", "", regex=False)
    df.insert(3, "phone_number", [f"id-{i:05d}" for i in range(len(df))])

    columns = []
    for name in df.columns:
        if name == "churn":
            columns.append((name, "target"))
        elif name == "phone_number":
            columns.append((name, "identifier"))
        elif name in CHURN_NOMINAL:
            columns.append((name, "nominal"))
        else:
            columns.append((name, "numeric"))

    df.iloc[:3333].to_csv(out / "churn_train.csv", index=False)
    df.iloc[3333:].to_csv(out / "churn_test.csv", index=False)
    write_schema(out / "churn.schema", columns, "yes")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as workdir:
        prepare_german(out, workdir)
        prepare_churn(out, workdir)
    print(f"wrote datasets to {out}")


if __name__ == "__main__":
    main()
