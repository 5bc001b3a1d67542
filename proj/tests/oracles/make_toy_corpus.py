"""Generates the toy story corpus with synthetic parses, lexicon and knowledge."""
import itertools
import json
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "toy"

NAMES = ["Anna", "Ben", "Cara", "Dan", "Eve", "Finn", "Gail", "Hugo"]
PLACES = ["store", "market", "mall", "shop"]
OBJECTS = ["bike", "lamp", "coat", "book", "radio", "chair", "kite", "watch"]
COLORS = ["red", "blue", "green", "black"]
PRICES = {"cheap": "happy", "expensive": "upset", "free": "thrilled", "broken": "angry"}
ADVERBS = ["quickly", "slowly"]

LEXICON = {"happy": 2.7, "upset": -1.6, "thrilled": 3.0, "angry": -2.3, "cheap": 0.4, "broken": -1.5, "free": 1.2}
KNOWLEDGE = [
    ("bike", "UsedFor", "riding"), ("lamp", "UsedFor", "light"), ("coat", "UsedFor", "warmth"),
    ("book", "UsedFor", "reading"), ("radio", "UsedFor", "music"), ("chair", "UsedFor", "sitting"),
    ("kite", "UsedFor", "flying"), ("watch", "UsedFor", "time"), ("store", "AtLocation", "town"),
    ("market", "AtLocation", "town"), ("bought", "RelatedTo", "money"), ("expensive", "RelatedTo", "money"),
    ("cheap", "RelatedTo", "bargain"), ("wanted", "RelatedTo", "desire"),
]

# (template, upos, heads) with one slot per token; heads are 1-based, 0 marks the root.
TEMPLATES = [
    ("{name} went to the {place} .", ["PROPN", "VERB", "ADP", "DET", "NOUN", "PUNCT"], [2, 0, 5, 5, 2, 2]),
    ("{pron} wanted a {color} {obj} .", ["PRON", "VERB", "DET", "ADJ", "NOUN", "PUNCT"], [2, 0, 5, 5, 2, 2]),
    ("The {obj} was {price} .", ["DET", "NOUN", "AUX", "ADJ", "PUNCT"], [2, 4, 4, 0, 4]),
    ("{pron} bought the {obj} {adv} .", ["PRON", "VERB", "DET", "NOUN", "ADV", "PUNCT"], [2, 0, 4, 2, 2, 2]),
]
ENDING = "{name} was {feeling} with the {obj} ."


def conllu(sid, text, upos, heads):
    lines = [f"# sent_id = {sid}", f"# text = {text}"]
    for i, (form, tag, head) in enumerate(zip(text.split(), upos, heads), start=1):
        lines.append("\t".join([str(i), form, form.lower(), tag, "_", "_", str(head), "root" if head == 0 else "dep", "_", "_"]))
    return "\n".join(lines)


def detok(text):
    return text.replace(" .", ".")


def make(rng, count, start):
    combos = list(itertools.product(range(len(NAMES)), range(len(OBJECTS)), range(len(PRICES))))
    rng.shuffle(combos)
    stories, parses = [], []
    for i, (n, o, p) in enumerate(combos[:count]):
        name = NAMES[n]
        price = list(PRICES)[p]
        slots = {
            "name": name, "pron": "She" if n % 2 == 0 else "He", "place": PLACES[(n + o) % len(PLACES)],
            "color": COLORS[(o + p) % len(COLORS)], "obj": OBJECTS[o], "price": price,
            "adv": ADVERBS[(n + p) % len(ADVERBS)], "feeling": PRICES[price],
        }
        sid = f"toy{start + i:03d}"
        context = []
        for k, (tmpl, upos, heads) in enumerate(TEMPLATES, start=1):
            text = tmpl.format(**slots)
            context.append(detok(text))
            parses.append(conllu(f"{sid}.{k}", text, upos, heads))
        stories.append({"id": sid, "context": context, "ending": detok(ENDING.format(**slots))})
    return stories, parses


def main():
    rng = random.Random(11)
    OUT.mkdir(parents=True, exist_ok=True)
    train, train_parses = make(rng, 40, 1)
    valid, valid_parses = train[32:], train_parses[32 * 4:]
    train, train_parses = train[:32], train_parses[:32 * 4]
    for i, s in enumerate(valid):
        s["id"] = f"val{i + 1:03d}"
    # Re-key validation parses to the renamed ids.
    rekeyed = []
    for i, s in enumerate(valid):
        for k in range(4):
            block = valid_parses[i * 4 + k].split("\n")
            block[0] = f"# sent_id = {s['id']}.{k + 1}"
            rekeyed.append("\n".join(block))
    (OUT / "train.jsonl").write_text("".join(json.dumps(s) + "\n" for s in train))
    (OUT / "valid.jsonl").write_text("".join(json.dumps(s) + "\n" for s in valid))
    (OUT / "parses.conllu").write_text("\n\n".join(train_parses + rekeyed) + "\n")
    (OUT / "lexicon.tsv").write_text("".join(f"{k}\t{v}\n" for k, v in LEXICON.items()))
    (OUT / "knowledge.tsv").write_text("".join("\t".join(e) + "\n" for e in KNOWLEDGE))


if __name__ == "__main__":
    main()
