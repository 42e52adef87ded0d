#!/usr/bin/env python3
"""Independent oracle for the fixture corpus.

Re-derives chunk texts from the raw fixture files, embeds them with a
from-scratch trigram / FNV-1a signed-bucket embedder, and brute-forces every
golden value the C++ tests freeze (cosines, top-k ids, routing and recall).

Usage: reference_oracle.py <data_dir> [--out FILE]
"""

import argparse
import csv
import json
import math
import os
import re
import sys
from fractions import Fraction

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1
DIMS = 256
TAU = 0.25


def normalize(raw):
    raw = raw.replace("\r\n", "\n").replace("\r", "\n")
    lines = []
    for line in raw.split("\n"):
        line = re.sub(r"[ \t\f\v]+", " ", line).strip(" ")
        lines.append(line)
    return "\n".join(lines).strip("\n")


def fnv1a(data):
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


def embed(text, dims=DIMS):
    text = normalize(text)
    if not text:
        raise ValueError("empty text")
    cps = list(text)
    tokens = [text] if len(cps) < 3 else ["".join(cps[i:i + 3]) for i in range(len(cps) - 2)]
    acc = [0.0] * dims
    for tok in tokens:
        h = fnv1a(tok.encode("utf-8"))
        acc[h % dims] += 1.0 if ((h >> 32) & 1) == 0 else -1.0
    norm = math.sqrt(sum(v * v for v in acc))
    if norm == 0.0:
        raise ValueError("zero vector")
    return [v / norm for v in acc]


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return dot / (na * nb)


def esc(s):
    return s.replace("%", "%25").replace("#", "%23").replace("@", "%40")


def read_tsv(path):
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f, delimiter="\t", quoting=csv.QUOTE_NONE))
    header = rows[0]
    return [dict(zip(header, r)) for r in rows[1:] if r]


def load_corpus(data_dir):
    """Returns {doc_id: chunk_text}; every fixture document fits one chunk."""
    corpus = {}
    base = os.path.join(data_dir, "corpus")
    for row in read_tsv(os.path.join(base, "dictionary.tsv")):
        body = row["definition"]
        if row["pronunciation"]:
            body += "\npronunciation: " + row["pronunciation"]
        if row["example"]:
            body += "\nexample: " + row["example"]
        key = esc(row["headword"]) + ("#" + esc(row["pronunciation"]) if row["pronunciation"] else "")
        corpus["dictionary:" + key] = normalize(body)
    for row in read_tsv(os.path.join(base, "characteristic_words.tsv")):
        corpus["characteristic_words:" + esc(row["word"])] = normalize(row["description"])
    for row in read_tsv(os.path.join(base, "gazetteer.tsv")):
        corpus["gazetteer:" + esc(row["town"]) + "@" + esc(row["region"])] = normalize(row["description"])
    for kind in ("encyclopedia", "moe_knowledge_base"):
        with open(os.path.join(base, kind + ".jsonl"), encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    rec = json.loads(line)
                    corpus[kind + ":" + rec["key"]] = normalize(rec["body"])
    return dict(sorted(corpus.items(), key=lambda kv: kv[0].encode("utf-8")))


def rank(corpus_vecs, query, k):
    q = embed(query)
    scored = [(cosine(q, v), i, doc) for i, (doc, v) in enumerate(corpus_vecs)]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return scored[:k]


def load_patterns(path):
    subs, prefixes = [], []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n").strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("prefix:"):
                prefixes.append(line[len("prefix:"):].strip().lower())
            else:
                subs.append(line.lower())
    return subs, prefixes


def is_translation(query, patterns):
    subs, prefixes = patterns
    q = query.lower()
    return any(s in q for s in subs) or any(q.lstrip().startswith(p) for p in prefixes)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("data_dir")
    ap.add_argument("--out")
    ap.add_argument("--check", help="exit 1 unless the output equals this file")
    args = ap.parse_args()

    corpus = load_corpus(args.data_dir)
    vecs = [(doc, embed(text)) for doc, text in corpus.items()]
    patterns = load_patterns(os.path.join(args.data_dir, "translation_patterns.txt"))

    out = {"chunk_count": len(corpus), "doc_ids": list(corpus.keys())}
    out["cosine_same"] = cosine(embed("客家文化"), embed("客家文化"))
    out["cosine_diff"] = cosine(embed("客家文化"), embed("天氣預報"))
    out["top3_rice_cake"] = [d for _, _, d in rank(vecs, "米食 粄", 3)]
    out["weather_top1"] = rank(vecs, "今天台北天氣如何", 1)[0][0]

    routing = read_tsv(os.path.join(args.data_dir, "eval", "routing.tsv"))
    correct = 0
    predictions = []
    for row in routing:
        if is_translation(row["query"], patterns):
            pred = "translation"
        else:
            top = rank(vecs, row["query"], 1)[0][0]
            pred = "cultural_kb" if top >= TAU else "web_search"
        predictions.append({"query": row["query"], "expected": row["expected"], "predicted": pred})
        correct += pred == row["expected"]
    out["routing_predictions"] = predictions
    out["routing_accuracy"] = correct / len(routing)

    retrieval = read_tsv(os.path.join(args.data_dir, "eval", "retrieval.tsv"))
    hits = 0
    probes = []
    for row in retrieval:
        top = [d for _, _, d in rank(vecs, row["query"], int(row["k"]))]
        found = row["doc_id"] in top
        hits += found
        probes.append({"query": row["query"], "doc_id": row["doc_id"], "found": found, "top": top})
    out["retrieval_probes"] = probes
    out["recall_at_k"] = hits / len(retrieval)

    # SUS, worked like a spreadsheet: one adjusted column per item, a row
    # total, then the column mean. Exact rationals until the end.
    with open(os.path.join(args.data_dir, "eval", "sus_responses.csv"), newline="") as f:
        rows = list(csv.DictReader(f))
    totals = []
    for row in rows:
        adjusted = [int(row[f"q{i}"]) - 1 if i % 2 else 5 - int(row[f"q{i}"]) for i in range(1, 11)]
        totals.append(Fraction(sum(adjusted)) * Fraction(5, 2))
    out["sus_scores"] = [float(t) for t in totals]
    out["sus_mean"] = float(sum(totals) / len(totals))

    text = json.dumps(out, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if args.check:
        with open(args.check, encoding="utf-8") as f:
            frozen = f.read()
        if frozen != text:
            sys.stderr.write(f"oracle output differs from {args.check}\n")
            sys.exit(1)
        print(f"oracle values match {args.check}")
    elif args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
