#!/usr/bin/env python3
"""Regenerates the files under fixtures/.

Everything here is written independently of the C++ code so the fixtures can
serve as oracles: the word2vec binary writer, the label tallies and the
TF-IDF counting table are all computed in this script.
"""

import csv
import io
import json
import math
import random
import re
import struct
from collections import Counter
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures"
LABELS = ["toxic", "severe_toxic", "obscene", "threat", "insult", "identity_hate"]
WORD = re.compile(r"[^\W\d_]+(?:['\-\u2019][^\W\d_]+)*")

NEUTRAL = """
about after again always answer article away back because before believe better between book
bring build call came care case change check city close come comment consider could course
data day different discussion doing done during early edit editor either enough even every
example fact family feel find first follow found friend give good government great group
happen help history home hope house idea important information interest issue keep kind know
last late later learn leave left life line little live long look made make many matter maybe
mean meeting might mind money month more morning move much music name need never news next
nice night note number often old only open order other page paper part people place plan play
point policy post power probably problem program provide public question quite read real
reason recent record remember report result right road room rule said same school second
section seem sense service several share short should show side since small society some
something soon source start state still story study sure system table take talk team tell
than thank that there these thing think those though thought three through time today
together topic town true try turn under until update used using very view wait want water
week well were what when where which while whole why will with without word work world would
write year yes yesterday young
""".split()

TOXIC = "awful hateful nasty disgusting worthless ugly horrible vile rotten garbage".split()
OBSCENE = "crap damn bloody hell freaking screw sucks darn".split()
INSULT = "stupid idiot moron loser pathetic dumb clown fool".split()
THREAT = "kill hurt destroy attack punch beat smash burn".split()
IDENTITY = {
    "female": ["women", "she", "girls"],
    "male": ["men", "he", "boys"],
    "asian": ["asian", "chinese"],
    "white": ["white", "caucasian"],
    "african_american": ["black", "african"],
    "muslim": ["muslim", "islam"],
}


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def labelled_doc(rng, toxic_rate):
    words = rng.choices(NEUTRAL, k=rng.randint(6, 18))
    labels = dict.fromkeys(LABELS, 0)
    groups = set()
    if rng.random() < 0.35:
        g = rng.choice(sorted(IDENTITY))
        groups.add(g)
        words.insert(rng.randrange(len(words) + 1), rng.choice(IDENTITY[g]))
    if rng.random() < toxic_rate:
        labels["toxic"] = 1
        words.insert(rng.randrange(len(words) + 1), rng.choice(TOXIC))
        if rng.random() < 0.5:
            labels["obscene"] = 1
            words.insert(rng.randrange(len(words) + 1), rng.choice(OBSCENE))
        if rng.random() < 0.5:
            labels["insult"] = 1
            words.insert(rng.randrange(len(words) + 1), rng.choice(INSULT))
        if rng.random() < 0.1:
            labels["threat"] = 1
            words.insert(rng.randrange(len(words) + 1), rng.choice(THREAT))
        if rng.random() < 0.15:
            labels["severe_toxic"] = 1
            words += rng.choices(TOXIC + OBSCENE, k=2)
        if groups and rng.random() < 0.4:
            labels["identity_hate"] = 1
    elif rng.random() < 0.05:
        words.insert(rng.randrange(len(words) + 1), rng.choice(TOXIC + INSULT))
    text = " ".join(words)
    text = text[0].upper() + text[1:] + rng.choice([".", "!", "?", ""])
    return text, labels, groups


def jigsaw_like(name, n, seed, toxic_rate):
    rng = random.Random(seed)
    rows, assignment = [], []
    for i in range(n):
        text, labels, groups = labelled_doc(rng, toxic_rate)
        doc_id = f"{name}-{i:05d}"
        rows.append([doc_id, text] + [labels[l] for l in LABELS])
        if groups:
            assignment.append([doc_id, ";".join(sorted(groups))])
    write_csv(OUT / f"{name}.csv", ["id", "comment_text"] + LABELS, rows)
    write_csv(OUT / f"{name}_assignment.csv", ["id", "subgroups"], assignment)
    return rows


def small_labelled():
    rows = jigsaw_like("small_labelled", 100, 7, 0.3)
    # a few rows exercising quoting and multi-line text
    rows[3][1] = 'He said "enough", then left.'
    rows[11][1] = "First line\nsecond line, with comma"
    rows[42][1] = "It’s a café review — well-known place"
    write_csv(OUT / "small_labelled.csv", ["id", "comment_text"] + LABELS, rows)
    tally = {l: sum(r[2 + j] for r in rows) for j, l in enumerate(LABELS)}
    (OUT / "small_labelled.tally.json").write_text(json.dumps(tally, indent=1) + "\n")

    # TF-IDF counting table: document frequencies, then idf.
    docs = [r[1] for r in rows]
    df = Counter()
    for d in docs:
        df.update({m.group(0).lower() for m in WORD.finditer(d)})
    n = len(docs)
    idf = {t: math.log((1 + n) / (1 + c)) + 1 for t, c in sorted(df.items())}
    (OUT / "small_labelled.idf.json").write_text(json.dumps(idf, indent=1) + "\n")


# Planted-bias corpus: every toxic document is toxic only because of a
# lexicon term aimed at the group it mentions.
PLANTED_GROUPS = {
    # group: (identity words, planted terms, planted rate)
    "female": (["woman", "she"], ["hysterical", "bossy", "shrill"], 0.5),
    "male": (["guy", "he"], ["macho", "brute"], 0.1),
    "asian": (["asian", "korean"], ["oriental", "exotic"], 0.45),
    "white": (["white", "european"], ["redneck", "hillbilly"], 0.1),
    "african_american": (["black", "african"], ["thug", "ghetto"], 0.15),
}
PLANTED_NEIGHBORS = {
    "hysterical": ["agitated", "upset", "distressed", "anxious", "worried", "tense"],
    "bossy": ["assertive", "decisive", "direct", "firm", "confident", "forthright"],
    "shrill": ["loud", "forceful", "emphatic", "vocal", "insistent", "strident"],
    "macho": ["bold", "tough", "rugged", "brash", "swaggering", "daring"],
    "brute": ["aggressor", "attacker", "bully", "ruffian", "assailant", "tough"],
    "oriental": ["eastern", "asiatic", "foreign", "overseas", "continental", "distant"],
    "exotic": ["distinctive", "unusual", "striking", "unfamiliar", "novel", "rare"],
    "redneck": ["rural", "rustic", "provincial", "countryside", "farmer", "local"],
    "hillbilly": ["mountaineer", "rustic", "villager", "backwoods", "highlander", "farmer"],
    "thug": ["criminal", "offender", "suspect", "delinquent", "hoodlum", "crook"],
    "ghetto": ["neighborhood", "district", "quarter", "community", "enclave", "slum"],
}


def planted():
    rng = random.Random(2024)
    rows, assignment = [], []
    i = 0
    for group, (ids, terms, rate) in PLANTED_GROUPS.items():
        for _ in range(60):
            words = rng.choices(NEUTRAL, k=rng.randint(6, 14))
            words.insert(rng.randrange(len(words) + 1), rng.choice(ids))
            toxic = rng.random() < rate
            if toxic:
                words.insert(rng.randrange(len(words) + 1), rng.choice(terms))
            doc_id = f"pb-{i:04d}"
            labels = [int(toxic), 0, 0, 0, int(toxic), 0]
            rows.append([doc_id, " ".join(words).capitalize() + "."] + labels)
            assignment.append([doc_id, group])
            i += 1
    order = list(range(len(rows)))
    rng.shuffle(order)
    rows = [rows[k] for k in order]
    assignment = [assignment[k] for k in order]
    write_csv(OUT / "planted.csv", ["id", "comment_text"] + LABELS, rows)
    write_csv(OUT / "planted_assignment.csv", ["id", "subgroups"], assignment)

    dim = 16
    vectors = {}

    def rand_vec(scale=1.0):
        return [rng.gauss(0, scale) for _ in range(dim)]

    for term, neighbors in PLANTED_NEIGHBORS.items():
        center = rand_vec()
        for w in [term] + neighbors:
            if w not in vectors:
                vectors[w] = [c + n for c, n in zip(center, rand_vec(0.35))]
    # lexicon neighbors to exercise filtering
    vectors["catty"] = [c + n for c, n in zip(vectors["hysterical"], rand_vec(0.2))]
    vectors["savages"] = [c + n for c, n in zip(vectors["oriental"], rand_vec(0.2))]
    for w in NEUTRAL[:120]:
        vectors.setdefault(w, rand_vec())
    lines = [f"{len(vectors)} {dim}"]
    for w, v in vectors.items():
        lines.append(w + " " + " ".join(f"{x:.6f}" for x in v))
    (OUT / "planted_embeddings.txt").write_text("\n".join(lines) + "\n")

    config = {
        "corpus": "planted.csv",
        "lexicon": "../data/seed_lexicon.json",
        "embeddings": "planted_embeddings.txt",
        "embeddings_format": "text",
        "assignment": "planted_assignment.csv",
        "out_dir": "planted_out",
        "pairs": "female:male,asian:white,african_american:white",
        "seed": 42,
    }
    (OUT / "planted_config.json").write_text(json.dumps(config, indent=2) + "\n")


def clean_corpus():
    rng = random.Random(99)
    rows = []
    for i in range(40):
        words = rng.choices(NEUTRAL, k=rng.randint(4, 16))
        text = " ".join(words)
        if i % 5 == 0:
            text = text.upper()
        if i % 7 == 0:
            text = '"' + text + '", she wrote.\nThanks'
        rows.append([f"clean-{i:03d}", text])
    write_csv(OUT / "clean.csv", ["id", "comment_text"], rows)


def word2vec_binary():
    rng = random.Random(314)
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa"]
    dim = 8
    source = []
    out = bytearray(f"{len(words)} {dim}\n".encode())
    text = [f"{len(words)} {dim}"]
    for w in words:
        # round through float32 so the JSON holds exactly representable values
        vec = [struct.unpack("<f", struct.pack("<f", rng.uniform(-2, 2)))[0] for _ in range(dim)]
        if w == "kappa":
            vec = [0.0] * dim
        source.append({"word": w, "vector": vec})
        out += w.encode() + b" " + struct.pack(f"<{dim}f", *vec) + b"\n"
        text.append(w + " " + " ".join(repr(x) for x in vec))
    (OUT / "w2v_small.bin").write_bytes(bytes(out))
    (OUT / "w2v_small.txt").write_text("\n".join(text) + "\n")
    (OUT / "w2v_small.source.json").write_text(json.dumps({"dimension": dim, "rows": source}, indent=1) + "\n")


def main():
    OUT.mkdir(exist_ok=True)
    small_labelled()
    jigsaw_like("synthetic_2k", 2000, 42, 0.15)
    planted()
    clean_corpus()
    word2vec_binary()


if __name__ == "__main__":
    main()
