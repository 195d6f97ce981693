#!/usr/bin/env python3
# Copyright 2026 The EAPMT Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Pins reference BLEU values computed with sacrebleu.

Usage: gen_bleu_oracle.py <fixtures-dir> <output.json>
"""
import json
import random
import sys

import sacrebleu
from sacrebleu.metrics import BLEU

LATIN = ["the", "crane", "water", "sea", "grace", "wind", "leg", "mirror", "shore",
         "bamboo", "hands", "light", "it's", "don't", "U.S.", "3.14", "1,000", "&",
         "(quiet)", "hello-world", "rain;", "snow!", "Fog", "CAT"]
CJK = list("白鹤水镜子腿海旅程影岸竹手风雨雪火冰心光夜月山") + ["，", "。", "！", "“", "”", "、"]
PUNCT = [",", ".", "?", "!", ":", "-", "'", '"', "…"]

GARBAGE_LINE = "qzx vbn wrt 丂丄丅"
GARBAGE_LINES = 16


def random_segment(rng):
    words = []
    for _ in range(rng.randint(1, 14)):
        r = rng.random()
        if r < 0.45:
            words.append(rng.choice(LATIN))
        elif r < 0.85:
            words.append("".join(rng.choice(CJK) for _ in range(rng.randint(1, 4))))
        else:
            words.append(rng.choice(PUNCT))
    out = ""
    for w in words:
        sep = rng.choice([" ", " ", "", "\n"]) if out else ""
        out += sep + w
    return out


def perturb(rng, seg):
    toks = seg.split(" ")
    if rng.random() < 0.3:
        return random_segment(rng)
    toks = [t for t in toks if rng.random() > 0.2] or toks[:1]
    if rng.random() < 0.5:
        toks.append(rng.choice(LATIN + CJK))
    if len(toks) > 2 and rng.random() < 0.4:
        i = rng.randrange(len(toks) - 1)
        toks[i], toks[i + 1] = toks[i + 1], toks[i]
    return " ".join(toks)


def corpus_case(name, hyps, refs, tokenizer, lowercase=False):
    bleu = BLEU(tokenize=tokenizer, smooth_method="exp", lowercase=lowercase)
    s = bleu.corpus_score(hyps, [refs])
    return {"name": name, "kind": "corpus", "tokenizer": tokenizer, "lowercase": lowercase,
            "hypotheses": hyps, "references": refs, "score": s.score,
            "counts": s.counts, "totals": s.totals, "sys_len": s.sys_len, "ref_len": s.ref_len}


def sentence_case(name, hyp, ref, tokenizer):
    bleu = BLEU(tokenize=tokenizer, smooth_method="exp", effective_order=True)
    s = bleu.sentence_score(hyp, [ref])
    return {"name": name, "kind": "sentence", "tokenizer": tokenizer, "lowercase": False,
            "hypotheses": [hyp], "references": [ref], "score": s.score,
            "counts": s.counts, "totals": s.totals, "sys_len": s.sys_len, "ref_len": s.ref_len}


def content_lines(poem):
    return [l for l in poem["lines"] if l.strip()]


def prefix_len(fraction, total):
    import math
    return int(math.floor(fraction * total + 0.5 + 1e-9))


def main():
    fixtures, out_path = sys.argv[1], sys.argv[2]
    rng = random.Random(20240501)
    cases = []
    for i in range(24):
        n = rng.randint(2, 10)
        refs = [random_segment(rng) for _ in range(n)]
        hyps = [perturb(rng, r) for r in refs]
        for tok in ("13a", "zh"):
            cases.append(corpus_case(f"random-{i:02d}-{tok}", hyps, refs, tok))
    for i in range(4):
        refs = [random_segment(rng) for _ in range(rng.randint(2, 10))]
        hyps = [perturb(rng, r) for r in refs]
        cases.append(corpus_case(f"lowercase-{i}", [h.upper() for h in hyps], refs, "13a", True))
    for i in range(8):
        a = random_segment(rng)
        b = perturb(rng, a)
        cases.append(sentence_case(f"sentence-{i}", b, a, "zh" if i % 2 else "13a"))

    identity = [random_segment(rng) for _ in range(6)]
    for tok in ("13a", "zh"):
        c = corpus_case(f"identity-{tok}", identity, identity, tok)
        assert round(c["score"], 2) == 100.0
        cases.append(c)
    disjoint = corpus_case("disjoint-zh", ["甲乙丙丁", "戊己庚"], ["白鹤停在水上", "竹子在风中"], "zh")
    assert disjoint["score"] == 0.0
    cases.append(disjoint)
    cases.append(corpus_case("disjoint-13a", ["alpha beta", "gamma"], ["the white crane", "sea"], "13a"))

    tokens = {}
    for tok in ("13a", "zh"):
        t = sacrebleu.tokenizers.tokenizer_13a.Tokenizer13a() if tok == "13a" else \
            sacrebleu.tokenizers.tokenizer_zh.TokenizerZh()
        samples = ["Hello, world! It's 3.14.", "白鹤，以一脚不可思议地。", "U.S. 1,000 cranes",
                   "mixed 中文 and English—dash", "(a) [b] {c} \"d\"", "Tab\tand\nnewline"]
        tokens[tok] = [{"text": s, "tokens": t(s).split()} for s in samples]

    # Garbage probe: a fixed reply scored against every fixture suffix.
    garbage = "\n".join([GARBAGE_LINE] * GARBAGE_LINES)
    with open(f"{fixtures}/mini.jsonl", encoding="utf-8") as f:
        pairs = [json.loads(l) for l in f if l.strip()]
    garbage_cells = []
    for side, key, tok in (("source", "source", "13a"), ("translation", "reference", "zh")):
        for fraction in (0.5, 0.7, 0.9):
            hyps, refs = [], []
            for p in pairs:
                lines = content_lines(p[key])
                k = prefix_len(fraction, len(lines))
                rest = lines[k:]
                hyps.append("\n".join(garbage.split("\n")[:len(rest)]))
                refs.append("\n".join(rest))
            s = BLEU(tokenize=tok, smooth_method="exp").corpus_score(hyps, [refs])
            garbage_cells.append({"side": side, "fraction": fraction, "score": s.score})
    threshold = 5.0
    assert all(c["score"] < threshold for c in garbage_cells)

    doc = {"generator": f"sacrebleu {sacrebleu.__version__}", "tolerance": 0.01,
           "cases": cases, "tokenizer_examples": tokens,
           "garbage": {"response": garbage, "threshold": threshold, "cells": garbage_cells}}
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
