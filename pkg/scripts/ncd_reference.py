#!/usr/bin/env python3
"""Standalone normalized-compression-distance reference.

Independent of the engine: compressed lengths come from
zlib.compressobj with a gzip container (wbits=31) instead of the gzip
module. Level is pinned to 6; header timestamp does not affect length.

Usage:
  ncd_reference.py CORPUS.json      # {"pairs": [{"id", "a", "b"}, ...]}
  prints one line per pair: "<id> <ncd with 17 significant digits>"
"""

import json
import sys
import zlib

LEVEL = 6


def gzip_container_len(data: bytes) -> int:
    co = zlib.compressobj(LEVEL, zlib.DEFLATED, 16 + 15)
    return len(co.compress(data) + co.flush())


def ncd(a: bytes, b: bytes) -> float:
    ca = gzip_container_len(a)
    cb = gzip_container_len(b)
    cab = gzip_container_len(a + b)
    return (cab - min(ca, cb)) / max(ca, cb)


def main(argv):
    with open(argv[1], encoding="utf-8") as fh:
        corpus = json.load(fh)
    for pair in corpus["pairs"]:
        value = ncd(pair["a"].encode("utf-8"), pair["b"].encode("utf-8"))
        print(f"{pair['id']} {value:.17g}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
