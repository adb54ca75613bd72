#!/usr/bin/env python3
"""Brute-force cosine goldens over the bundled vectors (independent of the Rust code)."""
import math
import re

def load(path):
    table = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    for i, line in enumerate(lines):
        parts = line.split()
        if i == 0 and len(parts) == 2:
            continue
        table[parts[0].lower()] = [float(x) for x in parts[1:]]
    return table

def cos(u, v):
    return sum(a * b for a, b in zip(u, v)) / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))

def mean(vs):
    return [sum(c) / len(vs) for c in zip(*vs)]

T = load("crates/core/assets/embeddings.txt")
REFS = [("softly", 0), ("moderately", 1), ("heavily", 2)]
HEADS = ["cries", "laughs", "sighs", "smiles"]

def tokens(s):
    return [t for t in re.split(r"[^a-z']+", s.lower()) if t]

def rank(words):
    vs = [T[w] for w in words if w in T]
    if not vs:
        return 1, None
    e = mean(vs)
    sims = [(cos(e, T[w]), r) for w, r in REFS]
    return max(sims, key=lambda p: (p[0], -p[1]))[1], sims

def resolve(cue):
    toks = tokens(cue)
    if not toks:
        return ("sighs", 1, "default")
    head, rest = toks[0], toks[1:]
    r, _ = rank(rest) if rest else (1, None)
    if head in HEADS:
        return (head, r, "exact")
    vs = [T[w] for w in toks if w in T]
    if not vs:
        return ("sighs", 1, "default")
    e = mean(vs)
    best = max(HEADS, key=lambda h: (cos(e, T[h]), [-ord(c) for c in h]))
    return (best, r, "nearest", [(h, round(cos(e, T[h]), 6)) for h in HEADS])

print("deeply", rank(["deeply"]))
for w, _ in REFS:
    print(w, rank([w]))
for cue in ["sighs", "cries softly", "looks down", "sighs heavily", "sobs", "nods slowly",
            "nods, clears throat", "looks away", "shakes head slightly", "sobs quietly",
            "sniffles", "bites lip, struggles", "sighs", "flags with his hands", "cries heavily",
            "bursts into tears", "sighs deeply", "qqqzzz", "bangs head"]:
    print(repr(cue), resolve(cue))
