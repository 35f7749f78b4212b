#!/usr/bin/env python3
"""Convert .cites/.content citation datasets into gnan's dataset formats.

Works with the usual WebKB (cornell, texas, washington, wisconsin), Cora and
Citeseer releases:

  <name>.content   one line per document: <id> <f_0> ... <f_{K-1}> <class>
  <name>.cites     one line per citation: <id_a> <id_b>

Citations are treated as undirected links; self-loops and citations that
mention unknown document ids are skipped (with a count reported). Binary word
features become attribute entries, class strings become integer labels in
alphabetical order. Outputs land in the given directory as <name>.edges,
<name>.attrs and <name>.labels, where <name> is taken from the content file.
"""

import argparse
import sys
from pathlib import Path


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("cites", help="<name>.cites citation list")
    parser.add_argument("content", help="<name>.content feature/class table")
    parser.add_argument("out_dir", help="output directory (e.g. data/cornell)")
    args = parser.parse_args()

    ids = []
    features = {}
    classes = {}
    n_feats = None
    for line in Path(args.content).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        doc, feats, cls = parts[0], parts[1:-1], parts[-1]
        if n_feats is None:
            n_feats = len(feats)
        elif len(feats) != n_feats:
            sys.exit(f"document {doc}: expected {n_feats} features, got {len(feats)}")
        if doc in features:
            sys.exit(f"duplicate document id {doc}")
        ids.append(doc)
        features[doc] = [k for k, f in enumerate(feats) if f != "0"]
        classes[doc] = cls
    if not ids:
        sys.exit("content file is empty")

    index = {doc: i for i, doc in enumerate(ids)}
    n = len(ids)

    pairs = set()
    skipped = 0
    for line in Path(args.cites).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            sys.exit(f"malformed citation line: {line!r}")
        a, b = parts
        if a not in index or b not in index or a == b:
            skipped += 1
            continue
        i, j = sorted((index[a], index[b]))
        pairs.add((i, j))
    edges = sorted(pairs)
    if skipped:
        print(f"skipped {skipped} citations (self-loops or unknown ids)")

    class_ids = {c: k for k, c in enumerate(sorted(set(classes.values())))}

    name = Path(args.content).stem
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / f"{name}.edges", "w") as fh:
        fh.write(f"nodes={n} directed=0\n")
        for a, b in edges:
            fh.write(f"{a}\t{b}\n")

    with open(out_dir / f"{name}.attrs", "w") as fh:
        fh.write(f"nodes={n} attrs={n_feats}\n")
        for doc in ids:
            for k in features[doc]:
                fh.write(f"{index[doc]}\t{k}\t1\n")

    with open(out_dir / f"{name}.labels", "w") as fh:
        fh.write(f"nodes={n} communities={len(class_ids)}\n")
        for doc in ids:
            fh.write(f"{class_ids[classes[doc]]}\n")

    print(
        f"wrote {n} nodes, {len(edges)} links, {n_feats} attributes, "
        f"{len(class_ids)} classes ({', '.join(sorted(class_ids))})"
    )


if __name__ == "__main__":
    main()
