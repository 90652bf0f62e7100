#!/usr/bin/env python3
"""Download the real-data benchmarks as headered CSV files.

Diabetes (442 x 10) is small enough to ship and is already committed at
crates/core/data/diabetes.csv; this script regenerates it. With --all,
California Housing is fetched into data/external/ (not committed). The WHO
Life Expectancy table is distributed through Kaggle ("Life Expectancy (WHO)")
and needs a manual download; any headered CSV works with `sweep --dataset
csv:PATH --target-col NAME`.

Usage: python3 scripts/fetch_datasets.py [--out DIR] [--all]
"""

import argparse
import pathlib


def write_diabetes(path: pathlib.Path) -> None:
    from sklearn.datasets import load_diabetes

    bunch = load_diabetes(scaled=False, as_frame=True)
    bunch.frame.to_csv(path, index=False, float_format="%.10g")


def write_california(path: pathlib.Path) -> None:
    from sklearn.datasets import fetch_california_housing

    frame = fetch_california_housing(as_frame=True).frame
    frame.to_csv(path, index=False, float_format="%.10g")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/external"))
    parser.add_argument("--all", action="store_true", help="also fetch California Housing")
    args = parser.parse_args()

    root = pathlib.Path(__file__).resolve().parent.parent
    write_diabetes(root / "crates/core/data/diabetes.csv")
    print("wrote crates/core/data/diabetes.csv")
    if args.all:
        args.out.mkdir(parents=True, exist_ok=True)
        write_california(args.out / "california_housing.csv")
        print(f"wrote {args.out}/california_housing.csv")


if __name__ == "__main__":
    main()
