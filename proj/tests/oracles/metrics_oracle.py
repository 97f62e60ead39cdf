#!/usr/bin/env python3
"""Brute-force reference values for the caption metric fixture.

Every metric is computed straight from its textbook definition with
exhaustive search where the C++ code uses a clever algorithm (LCS by
subsequence enumeration, METEOR alignments by enumerating every matching).
Output: one tab-separated row per pair with
id, bleu1..bleu4, meteor, rouge_l, cider, spice_f1, exact.
"""

import itertools
import math
import re
import string
import sys
from collections import Counter

SENTINELS = {"<bos>", "<eos>", "<pad>"}


def tokenize(text):
    out = []
    for raw in text.split():
        if raw in SENTINELS:
            continue
        w = "".join(ch for ch in raw if ch not in string.punctuation).lower()
        if w:
            out.append(w)
    return out


def grams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(cand, refs, n):
    if not cand:
        return 0.0
    logs = 0.0
    for k in range(1, n + 1):
        cg = grams(cand, k)
        if not cg:
            return 0.0
        clipped = 0
        for g, c in cg.items():
            clipped += min(c, max(grams(r, k)[g] for r in refs))
        if clipped == 0:
            return 0.0
        logs += math.log(clipped / sum(cg.values()))
    c = len(cand)
    r = min((abs(len(x) - c), len(x)) for x in refs)[1]
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return bp * math.exp(logs / n)


# --- METEOR -----------------------------------------------------------------

STEM_RULES = [("sses", "ss", 2), ("ies", "y", 2), ("ss", "ss", 1), ("ing", "", 3),
              ("ed", "", 3), ("ly", "", 3), ("es", "e", 3), ("s", "", 3)]


def stem(w):
    for suf, rep, keep in STEM_RULES:
        if len(w) >= len(suf) + keep and w.endswith(suf):
            return w[: len(w) - len(suf)] + rep
    return w


def crosses(p, q):
    return (p[0] - q[0]) * (p[1] - q[1]) < 0


def all_matchings(edges):
    """Every set of vertex-disjoint edges (exhaustive)."""
    result = []
    for size in range(len(edges), -1, -1):
        for combo in itertools.combinations(edges, size):
            cs = [e[0] for e in combo]
            rs = [e[1] for e in combo]
            if len(set(cs)) == size and len(set(rs)) == size:
                result.append(combo)
    return result


def meteor_align(cand, ref, syn):
    fixed = []
    stages = [lambda a, b: a == b, lambda a, b: stem(a) == stem(b)]
    if syn:
        stages.append(lambda a, b: (a, b) in syn)
    for rel in stages:
        used_c = {p[0] for p in fixed}
        used_r = {p[1] for p in fixed}
        edges = [(i, j) for i in range(len(cand)) for j in range(len(ref))
                 if i not in used_c and j not in used_r and rel(cand[i], ref[j])]
        if not edges:
            continue
        ms = all_matchings(edges)
        best_size = max(len(m) for m in ms)
        ms = [m for m in ms if len(m) == best_size]

        def key(m):
            chosen = list(m)
            cross = sum(1 for p in chosen for q in fixed if crosses(p, q))
            cross += sum(1 for a, b in itertools.combinations(chosen, 2) if crosses(a, b))
            assign = dict(chosen)
            # candidate positions open in this stage, in order; unmatched sorts last
            open_c = sorted({e[0] for e in edges})
            lex = tuple(assign.get(i, math.inf) for i in open_c)
            return (cross, lex)

        fixed += list(min(ms, key=key))
    fixed.sort()
    chunks = 0
    for k, p in enumerate(fixed):
        if not (k > 0 and p[0] == fixed[k - 1][0] + 1 and p[1] == fixed[k - 1][1] + 1):
            chunks += 1
    return fixed, chunks


def meteor(cand, ref, syn):
    if not cand or not ref:
        return 0.0
    pairs, chunks = meteor_align(cand, ref, syn)
    m = len(pairs)
    if m == 0:
        return 0.0
    p = m / len(cand)
    r = m / len(ref)
    f = 10 * p * r / (r + 9 * p)
    return f * (1 - 0.5 * (chunks / m) ** 3)


# --- ROUGE-L ------------------------------------------------------------------

def is_subsequence(sub, seq):
    it = iter(seq)
    return all(any(x == y for y in it) for x in sub)


def lcs_bruteforce(a, b):
    for size in range(len(a), 0, -1):
        for idx in itertools.combinations(range(len(a)), size):
            if is_subsequence([a[i] for i in idx], b):
                return size
    return 0


def rouge_l(cand, ref):
    if not cand or not ref:
        return 0.0
    lcs = lcs_bruteforce(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    b2 = 1.2 ** 2
    return (1 + b2) * r * p / (r + b2 * p)


# --- CIDEr --------------------------------------------------------------------

def cider_all(records):
    images = {rid: refs for rid, _, refs in records}
    n_img = len(images)
    df = Counter()
    for refs in images.values():
        present = set()
        for r in refs:
            for n in range(1, 5):
                present |= set(grams(r, n))
        df.update(present)

    def vec(tokens, n):
        g = grams(tokens, n)
        total = sum(g.values())
        return {k: (c / total) * math.log(n_img / max(df[k], 1)) for k, c in g.items()}

    def cos(a, b):
        na = math.sqrt(sum(v * v for v in a.values()))
        nb = math.sqrt(sum(v * v for v in b.values()))
        if na == 0 or nb == 0:
            return 0.0
        return sum(v * b.get(k, 0.0) for k, v in a.items()) / (na * nb)

    out = {}
    for rid, cand, refs in records:
        total = 0.0
        for r in refs:
            total += sum(cos(vec(cand, n), vec(r, n)) for n in range(1, 5)) / 4
        out[rid] = 10 * total / len(refs)
    return out


# --- mini-SPICE ---------------------------------------------------------------

DET = {"a", "an", "one", "the"}
ATTR = {"red", "blue", "green", "yellow"}
OBJ = {"circle", "square", "triangle", "cross"}
REL = {("above",): ("above", False), ("below",): ("above", True),
       ("left", "of"): ("left of", False), ("right", "of"): ("left of", True)}


def tag(tokens):
    """Tag string: D, A, O, R (relation phrase start, width stored), x."""
    tags = []
    i = 0
    while i < len(tokens):
        two = tuple(tokens[i:i + 2])
        if two in REL:
            tags.append(("R", i, 2))
            i += 2
            continue
        t = tokens[i]
        if (t,) in REL:
            tags.append(("R", i, 1))
        elif t in OBJ:
            tags.append(("O", i, 1))
        elif t in ATTR:
            tags.append(("A", i, 1))
        elif t in DET:
            tags.append(("D", i, 1))
        else:
            tags.append(("x", i, 1))
        i += 1
    return tags


NP = r"D?A?O"


def np_tuples(tokens, start, end):
    words = tokens[start:end]
    obj = words[-1]
    out = {("obj", obj)}
    if len(words) >= 2 and words[-2] in ATTR:
        out.add(("attr", words[-2], obj))
    return out, obj


def spice_tuples(tokens):
    tags = tag(tokens)
    letters = "".join(t[0] for t in tags)

    def span(a, b):
        return tags[a][1], tags[b - 1][1] + tags[b - 1][2]

    m = re.fullmatch(rf"({NP})(?:(R)({NP}))?", letters)
    if m:
        s, e = span(*m.span(1))
        out, o1 = np_tuples(tokens, s, e)
        if m.group(2):
            ridx = m.start(2)
            rs, re_ = span(ridx, ridx + 1)
            canon, rev = REL[tuple(tokens[rs:re_])]
            s2, e2 = span(*m.span(3))
            t2, o2 = np_tuples(tokens, s2, e2)
            out |= t2
            out.add(("rel",) + ((o2, canon, o1) if rev else (o1, canon, o2)))
        return out

    # fragments: leftmost noun phrases; a relation links two noun phrases
    # that touch it on both sides
    out = set()
    pos = 0
    prev = None
    while pos < len(letters):
        m = re.compile(NP).match(letters, pos)
        if m:
            s, e = span(*m.span())
            t, o = np_tuples(tokens, s, e)
            out |= t
            prev = o
            pos = m.end()
            continue
        if prev is not None and letters[pos] == "R":
            m2 = re.compile(NP).match(letters, pos + 1)
            if m2:
                rs, re_ = span(pos, pos + 1)
                canon, rev = REL[tuple(tokens[rs:re_])]
                s2, e2 = span(*m2.span())
                t2, o2 = np_tuples(tokens, s2, e2)
                out |= t2
                out.add(("rel",) + ((o2, canon, prev) if rev else (prev, canon, o2)))
                prev = o2
                pos = m2.end()
                continue
        prev = None
        pos += 1
    return out


def f1(a, b):
    if not a or not b:
        return 0.0
    common = len(a & b)
    if common == 0:
        return 0.0
    p = common / len(a)
    r = common / len(b)
    return 2 * p * r / (p + r)


def main():
    pairs_path, syn_path = sys.argv[1], sys.argv[2]
    syn = set()
    with open(syn_path) as fh:
        for line in fh:
            line = line.split("#")[0].split()
            if line:
                syn.add((line[0], line[1]))
                syn.add((line[1], line[0]))
    records = []
    with open(pairs_path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            f = line.split("\t")
            records.append((f[0], tokenize(f[1]), [tokenize(x) for x in f[2:]]))
    cider = cider_all(records)
    for rid, cand, refs in records:
        b = [bleu(cand, refs, n) for n in range(1, 5)]
        met = max(meteor(cand, r, syn) for r in refs)
        rl = max(rouge_l(cand, r) for r in refs)
        ref_t = set()
        for r in refs:
            ref_t |= spice_tuples(r)
        sp = f1(spice_tuples(cand), ref_t)
        exact = int(any(cand == r for r in refs))
        vals = b + [met, rl, cider[rid], sp]
        print("\t".join([rid] + [f"{v:.12f}" for v in vals] + [str(exact)]))


if __name__ == "__main__":
    main()
