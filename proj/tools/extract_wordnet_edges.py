#!/usr/bin/env python3
"""Write noun hypernym edges from a WordNet data.noun file as child<TAB>parent.

Concepts are named by synset offset plus the first lemma (e.g. 02084071.dog)
so names stay unique. Instance hypernyms (@i) are included unless
--no-instances is given.
"""

import argparse
import sys


def synsets(path):
    with open(path, encoding="utf-8", errors="replace") as f:
        for line in f:
            if line.startswith("  ") or len(line.split(" ")) < 5:  # license header, blanks
                continue
            fields = line.split(" ")
            offset, n_words = fields[0], int(fields[3], 16)
            lemma = fields[4]
            i = 4 + 2 * n_words
            n_ptrs = int(fields[i])
            i += 1
            ptrs = []
            for _ in range(n_ptrs):
                symbol, target, pos = fields[i], fields[i + 1], fields[i + 2]
                i += 4
                if pos == "n":
                    ptrs.append((symbol, target))
            yield offset, lemma, ptrs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("data_noun", help="path to WordNet data.noun")
    ap.add_argument("--out", default="-", help="edge file to write (default: stdout)")
    ap.add_argument("--no-instances", action="store_true", help="skip instance hypernyms")
    args = ap.parse_args()

    symbols = {"@"} if args.no_instances else {"@", "@i"}
    names, raw = {}, []
    for offset, lemma, ptrs in synsets(args.data_noun):
        names[offset] = f"{offset}.{lemma.lower()}"
        raw.extend((offset, target) for symbol, target in ptrs if symbol in symbols)

    edges = sorted({(names[c], names[p]) for c, p in raw if c in names and p in names})
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    for child, parent in edges:
        out.write(f"{child}\t{parent}\n")
    if out is not sys.stdout:
        out.close()
    print(f"{len(edges)} edges over {len({n for e in edges for n in e})} concepts", file=sys.stderr)


if __name__ == "__main__":
    main()
