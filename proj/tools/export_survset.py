#!/usr/bin/env python3
"""Export SUPPORT2, Aids2 and COLON from the SurvSet package to censrank CSV + schema files.

    pip install --no-deps SurvSet
    python3 tools/export_survset.py --out data/

SurvSet stores each dataset as a pandas pickle with columns `pid`, `event`,
`time`, `num_*` (continuous) and `fac_*` (categorical, with an explicit
"missing" level). Continuous NaNs are written as empty cells.
"""

import argparse
import os
import sys

import pandas as pd

DATASETS = {
    "support2": {"file": "support2", "bin_width": 1, "smoothing": 1},
    "aids2": {"file": "Aids2", "bin_width": 1, "smoothing": 1},
    "colon": {"file": "colon", "bin_width": 2, "smoothing": 10},
}


def survset_dir(explicit):
    if explicit:
        return explicit
    try:
        import SurvSet  # noqa: F401
    except ImportError:
        sys.exit("SurvSet is not installed; pip install --no-deps SurvSet or pass --survset-dir")
    return os.path.join(os.path.dirname(SurvSet.__file__), "resources", "pickles")


def export(name, meta, src, out):
    df = pd.read_pickle(os.path.join(src, meta["file"] + ".pickle"))
    df = df.drop(columns=["pid"])
    for c in df.columns:
        if str(df[c].dtype) == "category":
            df[c] = df[c].astype(str)
    csv_path = os.path.join(out, name + ".csv")
    df.to_csv(csv_path, index=False, na_rep="")
    lines = [
        f"# {name}: {len(df)} rows, {int((df.event == 0).sum())} censored, {df.time.nunique()} unique times",
        f"# suggested: --bin-width {meta['bin_width']} --wm-smoothing {meta['smoothing']}",
        "delimiter = ,",
        "missing =",
        "column time = time",
        "column event = event_indicator",
    ]
    for c in df.columns:
        if c.startswith("num_"):
            lines.append(f"column {c} = continuous")
        elif c.startswith("fac_"):
            lines.append(f"column {c} = categorical missing=missing")
    with open(os.path.join(out, name + ".schema"), "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"{name}: {len(df)} rows -> {csv_path}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="data")
    ap.add_argument("--survset-dir", default=None, help="directory holding the SurvSet pickles")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    src = survset_dir(args.survset_dir)
    for name, meta in DATASETS.items():
        export(name, meta, src, args.out)


if __name__ == "__main__":
    main()
