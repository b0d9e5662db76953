#!/usr/bin/env python3
"""Write the two benchmark CSVs used by the acceptance suite into data/.

breast_cancer.csv  UCI Breast Cancer Wisconsin (Diagnostic), 569 rows, 30
                   features, `diagnosis` in {B, M}. Taken from the copy that
                   ships with scikit-learn.
satlog.csv         UCI Statlog (Landsat Satellite), 4435 rows, 36 features,
                   `class` in {1,2,3,4,5,7}; 4 is "damp grey soil". Taken
                   from the KEEL `satimage` file (all 6435 Statlog rows)
                   bundled in the keel-ds wheel; the first 4435 rows are kept
                   to match the size of the original training partition. The
                   KEEL row order differs from sat.trn, so this is not the
                   exact sat.trn partition.
"""
import argparse
import csv
import pathlib
import subprocess
import sys
import tempfile
import zipfile


def write_breast_cancer(out: pathlib.Path) -> None:
    from sklearn.datasets import load_breast_cancer

    bunch = load_breast_cancer()
    names = [n.replace(" ", "_") for n in bunch.feature_names]
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["diagnosis"])
        for row, target in zip(bunch.data, bunch.target):
            # scikit-learn encodes malignant as 0
            w.writerow([repr(float(v)) for v in row] + ["M" if target == 0 else "B"])


def write_satlog(out: pathlib.Path) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "keel-ds==0.2.5", "-d", tmp],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("keel_ds-*.whl"))
        text = zipfile.ZipFile(wheel).read("keel_ds/data/balanced/raw/satimage.dat").decode()
    rows = [line for line in text.splitlines() if line.strip() and not line.startswith("@")]
    rows = rows[:4435]
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"a{i + 1}" for i in range(36)] + ["class"])
        for line in rows:
            w.writerow([cell.strip() for cell in line.split(",")])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", default=pathlib.Path(__file__).resolve().parent.parent / "data", type=pathlib.Path)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_breast_cancer(args.out_dir / "breast_cancer.csv")
    write_satlog(args.out_dir / "satlog.csv")


if __name__ == "__main__":
    main()
