#!/usr/bin/env python3
"""Rebuild the MovieLens ML-100K directory layout (u.data, u.item, u.user).

grouplens.org is not always reachable from build machines, so this pulls the
copy of ML-100K bundled inside the `recbole` wheel on PyPI and rewrites it in
the original tab/pipe separated layout expected by `load_movielens`.

Release dates, video dates and IMDb URLs are not present in that copy and are
left empty in u.item.

Usage: python3 scripts/fetch_ml100k.py [output_dir]   (default: data/ml-100k)
"""
import pathlib
import subprocess
import sys
import tempfile
import zipfile

GENRES = [
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]
PREFIX = "recbole/dataset_example/ml-100k/ml-100k."


def read(z, suffix):
    lines = z.read(PREFIX + suffix).decode("latin-1").splitlines()
    return [line.split("\t") for line in lines[1:] if line]


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/ml-100k")
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
             "-d", tmp, "recbole==1.2.1"],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        with zipfile.ZipFile(wheel) as z:
            inter = read(z, "inter")
            items = read(z, "item")
            users = read(z, "user")

    with open(out / "u.data", "w", encoding="latin-1", newline="\n") as f:
        for user, item, rating, ts in inter:
            f.write(f"{user}\t{item}\t{int(float(rating))}\t{int(float(ts))}\n")

    items.sort(key=lambda r: int(r[0]))
    with open(out / "u.item", "w", encoding="latin-1", newline="\n") as f:
        for row in items:
            item, title, year = row[0], row[1], row[2]
            classes = set(row[3].split(" ")) if len(row) > 3 else set()
            unknown = classes - set(GENRES)
            if unknown:
                raise SystemExit(f"unexpected genre(s) {unknown} for item {item}")
            flags = "|".join("1" if g in classes else "0" for g in GENRES)
            label = f"{title} ({year})" if year else title
            f.write(f"{item}|{label}||||{flags}\n")

    users.sort(key=lambda r: int(r[0]))
    with open(out / "u.user", "w", encoding="latin-1", newline="\n") as f:
        for user, age, gender, occupation, zipcode in users:
            f.write(f"{user}|{age}|{gender}|{occupation}|{zipcode}\n")

    print(f"wrote {len(inter)} ratings, {len(items)} items, {len(users)} users to {out}")


if __name__ == "__main__":
    main()
