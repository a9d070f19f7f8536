"""Regenerate stars_mars.jsonl: 30 synthetic results for the query "Mars".

Each snippet is 40 tokens. Document i repeats a rotating 3-entry subset of
the target entries round(i * 0.4) times in total, so target density rises
steadily across the corpus while the number of distinct targets per document
stays fixed and every entry has a similar document frequency. The lowest
density documents carry no targets and a few competitor terms instead. The
engine order is a seeded shuffle, unrelated to density.

    python3 fixtures/gen_stars_mars.py > fixtures/stars_mars.jsonl
"""

import hashlib
import json
import random

SEED = 20140401
N_DOCS = 30
SNIPPET_LEN = 40
TARGETS = [
    "planet", "star", "orbit", "galaxy", "nebula", "telescope",
    "constellation", "astronomy", "red planet", "solar system",
]
COMPETITORS = ["rover", "chocolate", "candy", "bar"]
FILLER = (
    "crater dust storm valley canyon ice cap pressure climate season wind volcano "
    "mountain river water mission launch lander probe camera image photo signal "
    "data report news team science research history ancient surface temperature "
    "atmosphere distance week night day model polar olympus mons earth sky view "
    "sample drill rock soil basin ridge plain dune frost cloud haze sunset sunrise "
    "orbiter antenna relay power panel battery heater radio laser spectrum mineral"
).split()


def result_id(url):
    rest = url.split("://", 1)[1].split("#", 1)[0]
    host_path = rest.split("?", 1)[0].rstrip("/")
    query = "?" + rest.split("?", 1)[1] if "?" in rest else ""
    return hashlib.sha256((host_path + query).encode()).hexdigest()[:16]


def snippet(rng, i):
    n_targets = round(i * 0.4)
    n_comps = max(0, 3 - i // 4)
    pool = [TARGETS[(3 * i + k) % len(TARGETS)] for k in range(3)]
    pieces = [pool[k % 3] for k in range(n_targets)]
    pieces += [rng.choice(COMPETITORS) for _ in range(n_comps)]
    used = sum(len(p.split()) for p in pieces)
    pieces += rng.sample(FILLER, SNIPPET_LEN - used)
    rng.shuffle(pieces)
    return " ".join(pieces) + "."


def main():
    rng = random.Random(SEED)
    docs = []
    for i in range(N_DOCS):
        url = f"https://astro.example.org/mars/{i:02d}"
        title = "Mars " + " ".join(w.capitalize() for w in rng.sample(FILLER, 4))
        docs.append({"url": url, "title": title, "snippet": snippet(rng, i)})
    order = list(range(N_DOCS))
    rng.shuffle(order)
    print(json.dumps({"query": "Mars", "engine": "synthetic", "recorded_at": "2014-04-01T00:00:00Z"}, separators=(",", ":")))
    for rank, i in enumerate(order, start=1):
        d = docs[i]
        print(json.dumps({
            "id": result_id(d["url"]), "rank": rank, "url": d["url"],
            "title": d["title"], "snippet": d["snippet"], "body": "",
        }, ensure_ascii=False, separators=(",", ":")))


if __name__ == "__main__":
    main()
