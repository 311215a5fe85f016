"""Regenerates the corpus fixtures under corpus/. Deterministic for a fixed numpy."""
import json
from pathlib import Path

import numpy as np

DIM = 8
N = 1000
OUT = Path(__file__).resolve().parent / "corpus"


def draw(rng, centers, n):
    comp = rng.integers(0, len(centers), size=n)
    return centers[comp] + 0.6 * rng.standard_normal((n, DIM))


def scores(rng, x, w):
    p = 1.0 / (1.0 + np.exp(-(x @ w)))
    passes = rng.binomial(5, p)
    bleu = np.clip(0.3 + 0.2 * np.tanh(x[:, 1]) + 0.05 * rng.standard_normal(len(x)), 0.0, 1.0)
    cc = 1 + rng.poisson(2.0 + np.abs(x[:, 2]))
    return passes / 5.0, bleu, cc


def records(prefix, x, s):
    out = []
    for i in range(len(x)):
        out.append({
            "id": f"{prefix}/{i:04d}",
            "prompt": f"{prefix} task {i}",
            "embedding": [round(float(v), 6) for v in x[i]],
            "scores": {"pass@1": float(s[0][i]), "codebleu": round(float(s[1][i]), 6), "cc": int(s[2][i])},
        })
    return out


def write(path, rows):
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True) + "\n")


def main():
    rng = np.random.default_rng(20240611)
    centers = rng.standard_normal((3, DIM))
    w = 0.8 * rng.standard_normal(DIM) / np.sqrt(DIM) * 3.0
    shift = np.zeros(DIM)
    shift[0] = 0.8
    shift[3] = -0.5
    src = draw(rng, centers, N)
    tgt = draw(rng, centers + shift, N)
    OUT.mkdir(exist_ok=True)
    source = records("src", src, scores(rng, src, w))
    target = records("tgt", tgt, scores(rng, tgt, w))
    write(OUT / "source.jsonl", source)
    write(OUT / "target.jsonl", target)
    write(OUT / "target_prompts.jsonl", [{"id": r["id"], "prompt": r["prompt"], "scores": r["scores"]} for r in target])
    write(OUT / "target_embeddings.jsonl", [{"id": r["id"], "vector": r["embedding"]} for r in reversed(target)])


if __name__ == "__main__":
    main()
