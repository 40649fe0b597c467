#!/usr/bin/env python3
"""Regenerates the toy corpora under tests/fixtures.

Output is deterministic; rerunning overwrites the committed files with
identical bytes.
"""

import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

DETS = ["the", "a", "every", "this"]
ADJS = ["big", "old", "red", "quiet", "happy"]
NOUNS = ["dog", "cat", "man", "park", "ball", "bird", "house", "child"]
VERBS = ["sees", "likes", "finds", "chases", "saw", "wants"]
PREPS = ["in", "near"]


def noun_phrase(rng):
    words = [(rng.choice(DETS), "DT", "DET")]
    if rng.random() < 0.5:
        words.append((rng.choice(ADJS), "JJ", "ADJ"))
    words.append((rng.choice(NOUNS), "NN", "NOUN"))
    return words


def sentence(rng):
    """Returns tokens as (form, xpos, upos, role) plus a tree and a graph."""
    subj = noun_phrase(rng)
    verb = [(rng.choice(VERBS), "VBZ", "VERB")]
    obj = noun_phrase(rng)
    pp = []
    if rng.random() < 0.35:
        pp = [(rng.choice(PREPS), "IN", "ADP")] + noun_phrase(rng)
    tokens = subj + verb + obj + pp + [(".", ".", "PUNCT")]

    n = len(tokens)
    heads = [0] * n
    labels = [""] * n
    subj_noun = len(subj) - 1
    verb_i = len(subj)
    obj_start = verb_i + 1
    obj_noun = obj_start + len(obj) - 1
    for i in range(len(subj) - 1):
        heads[i] = subj_noun + 1
        labels[i] = "det" if tokens[i][2] == "DET" else "amod"
    heads[subj_noun] = verb_i + 1
    labels[subj_noun] = "nsubj"
    heads[verb_i] = 0
    labels[verb_i] = "root"
    for i in range(obj_start, obj_noun):
        heads[i] = obj_noun + 1
        labels[i] = "det" if tokens[i][2] == "DET" else "amod"
    heads[obj_noun] = verb_i + 1
    labels[obj_noun] = "obj"
    if pp:
        p = obj_noun + 1
        pnoun = p + len(pp) - 1
        heads[p] = pnoun + 1
        labels[p] = "case"
        for i in range(p + 1, pnoun):
            heads[i] = pnoun + 1
            labels[i] = "det" if tokens[i][2] == "DET" else "amod"
        heads[pnoun] = verb_i + 1
        labels[pnoun] = "obl"
    heads[n - 1] = verb_i + 1
    labels[n - 1] = "punct"

    # Semantic graph: arcs (head, dependent, label), 1-based, 0 = top.
    arcs = [(0, verb_i + 1, "TOP")]
    arcs.append((verb_i + 1, subj_noun + 1, "ARG1"))
    arcs.append((verb_i + 1, obj_noun + 1, "ARG2"))
    for np_start, np_noun in ((0, subj_noun), (obj_start, obj_noun)):
        arcs.append((np_start + 1, np_noun + 1, "BV"))
        for i in range(np_start + 1, np_noun):
            arcs.append((i + 1, np_noun + 1, "ARG1"))
    if pp:
        p = obj_noun + 1
        pnoun = p + len(pp) - 1
        arcs.append((p + 1, verb_i + 1, "ARG1"))
        arcs.append((p + 1, pnoun + 1, "ARG2"))
        arcs.append((p + 2, pnoun + 1, "BV"))
        for i in range(p + 2, pnoun):
            arcs.append((i + 1, pnoun + 1, "ARG1"))
    return tokens, heads, labels, arcs


def lemma(form):
    return {"sees": "see", "likes": "like", "finds": "find", "chases": "chase",
            "saw": "see", "wants": "want"}.get(form, form)


def write(name, text):
    with open(os.path.join(HERE, name), "w", newline="\n") as f:
        f.write(text)


def tagged(rng, count):
    out = []
    for _ in range(count):
        tokens, _, _, _ = sentence(rng)
        for form, xpos, _ in tokens:
            out.append(f"{form}\t{xpos}\n")
        out.append("\n")
    return "".join(out)


def conllu(rng, count, prefix):
    out = []
    for k in range(count):
        tokens, heads, labels, _ = sentence(rng)
        out.append(f"# sent_id = {prefix}-{k + 1}\n")
        out.append("# text = " + " ".join(t[0] for t in tokens) + "\n")
        for i, (form, xpos, upos) in enumerate(tokens):
            out.append(f"{i + 1}\t{form}\t{lemma(form)}\t{upos}\t{xpos}\t_\t"
                       f"{heads[i]}\t{labels[i]}\t_\t_\n")
        out.append("\n")
    return "".join(out)


def sdp(rng, count, prefix):
    out = []
    for k in range(count):
        tokens, _, _, arcs = sentence(rng)
        n = len(tokens)
        preds = sorted({h for h, _, _ in arcs if h != 0})
        out.append(f"#2{prefix}{k + 1:04d}\n")
        for i, (form, xpos, _) in enumerate(tokens):
            d = i + 1
            top = "+" if (0, d, "TOP") in arcs else "-"
            pred = "+" if d in preds else "-"
            cols = ["_"] * len(preds)
            for h, dd, lab in arcs:
                if dd == d and h != 0:
                    cols[preds.index(h)] = lab
            out.append("\t".join([str(d), form, lemma(form), xpos, top, pred, "_"] + cols) + "\n")
        out.append("\n")
    return "".join(out)


def subwords(form):
    if len(form) <= 3:
        return 1
    return 2 if len(form) <= 5 else 3


def sidecar_text(rng, corpus_text, dim):
    out = []
    sentences = [s for s in corpus_text.split("\n\n") if s.strip()]
    for s_idx, block in enumerate(sentences):
        for t_idx, line in enumerate(block.splitlines()):
            form = line.split("\t")[0]
            for _ in range(subwords(form)):
                values = " ".join(f"{rng.uniform(-1, 1):.3f}" for _ in range(dim))
                out.append(f"{s_idx} {t_idx + 1} {values}\n")
    return "".join(out)


def embeddings(rng, dim):
    words = DETS + ADJS + NOUNS + VERBS + PREPS + ["."]
    out = [f"{len(words)} {dim}\n"]
    for w in words:
        out.append(w + " " + " ".join(f"{rng.uniform(-1, 1):.4f}" for _ in range(dim)) + "\n")
    return "".join(out)


def main():
    rng = random.Random(20201004)
    toy_tagged = tagged(rng, 32)
    write("toy.tagged", toy_tagged)
    write("toy.conllu", conllu(rng, 16, "toy"))
    write("toy.sdp", sdp(rng, 16, "1"))
    write("toy_dev.tagged", tagged(rng, 8))
    write("toy_dev.conllu", conllu(rng, 6, "dev"))
    write("toy_dev.sdp", sdp(rng, 6, "2"))
    write("toy_sidecar.txt", sidecar_text(rng, toy_tagged, 4))
    write("toy.vec", embeddings(rng, 8))


if __name__ == "__main__":
    main()
