"""Brute-force reference graph for tests/data/graph_story.jsonl."""
import json
import pathlib
import string

ROOT = pathlib.Path(__file__).resolve().parents[2]
DATA = ROOT / "tests" / "data"

TERMINAL = ".,!?;:"


def tokenize(text):
    out = []
    for chunk in text.split():
        trailing = []
        while chunk and chunk[-1] in TERMINAL:
            trailing.append(chunk[-1])
            chunk = chunk[:-1]
        if chunk:
            out.append(chunk.lower())
        out.extend(reversed(trailing))
    return out


def load_stopwords():
    lines = (ROOT / "data" / "stopwords.txt").read_text().splitlines()
    return {l.strip() for l in lines if l.strip() and not l.startswith("#")}


def is_content(tok, stop):
    return tok not in stop and not all(c in string.punctuation for c in tok)


def main():
    story = json.loads((DATA / "graph_story.jsonl").read_text().splitlines()[0])
    stop = load_stopwords()
    sents = [tokenize(s) for s in story["context"]]
    edges = []
    for line in (DATA / "graph_knowledge.tsv").read_text().splitlines():
        h, _, t = line.split("\t")
        edges.append((h.strip().lower(), t.strip().lower()))
    concepts = {c for e in edges for c in e}

    nodes = [("g", "global")]
    nodes += [(f"s{k + 1}", "sentence") for k in range(len(sents))]
    words = sorted({t for s in sents for t in s if is_content(t, stop)})
    nodes += [(f"w:{w}", "word") for w in words]

    kept = {}
    for c in sorted(concepts):
        support = set()
        for k, s in enumerate(sents):
            for tok in s:
                if not is_content(tok, stop):
                    continue
                if (tok, c) in edges or (c, tok) in edges:
                    support.add(k + 1)
        if len(support) >= 2:
            kept[c] = sorted(support)
    nodes += [(f"k:{c}", "knowledge") for c in sorted(kept)]

    out_edges = []
    for k in range(len(sents)):
        out_edges.append(("g", f"s{k + 1}", "global_to_sentence"))
        out_edges.append((f"s{k + 1}", "g", "sentence_to_global"))
    for k in range(len(sents) - 1):
        out_edges.append((f"s{k + 1}", f"s{k + 2}", "sentence_to_sentence"))
    for w in words:
        for k, s in enumerate(sents):
            if w in s:
                out_edges.append((f"w:{w}", f"s{k + 1}", "word_to_sentence"))
                out_edges.append((f"s{k + 1}", f"w:{w}", "sentence_to_word"))
    for c, support in kept.items():
        for k in support:
            out_edges.append((f"k:{c}", f"s{k}", "knowledge_to_sentence"))
            out_edges.append((f"s{k}", f"k:{c}", "sentence_to_knowledge"))

    result = {
        "nodes": [{"id": i, "type": t} for i, t in sorted(nodes)],
        "edges": [{"src": s, "dst": d, "type": t} for s, d, t in sorted(out_edges)],
        "concepts": kept,
    }
    (DATA / "graph_expected.json").write_text(json.dumps(result, indent=1) + "\n")
    print(f"{len(nodes)} nodes, {len(out_edges)} edges, concepts {kept}")


if __name__ == "__main__":
    main()
