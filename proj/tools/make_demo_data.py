#!/usr/bin/env python3
"""Writes the small synthetic demo corpus under data/demo.

Stance is weakly signalled by vocabulary (question words, negations,
agreement words) so that a model can do better than the majority class.
Output is deterministic for a given --seed.
"""
import argparse
import json
import math
import random
from pathlib import Path

TOPIC = ["police", "shooting", "hostage", "cafe", "plane", "crash", "pilot", "stadium",
         "reports", "breaking", "news", "city", "officials", "witness", "video", "photo",
         "suspect", "gunman", "victims", "scene", "today", "people", "government", "army"]
SUPPORT = ["confirmed", "true", "agree", "indeed", "official", "verified", "exactly", "yes"]
DENY = ["not", "fake", "false", "hoax", "never", "wrong", "nobody", "nothing", "lie"]
QUERY = ["really", "source", "why", "how", "who", "where", "proof", "what"]
COMMENT = ["wow", "sad", "thoughts", "prayers", "omg", "terrible", "god", "hope", "crazy"]
SWEAR = ["damn", "hell", "crap"]

LABELS = ["comment", "deny", "query", "support"]


def words(rng, pool, k):
    return [rng.choice(pool) for _ in range(k)]


def make_text(rng, label, is_source):
    body = words(rng, TOPIC, rng.randint(3, 7))
    if label == "support":
        body += words(rng, SUPPORT, rng.randint(1, 2))
    elif label == "deny":
        body += words(rng, DENY, rng.randint(1, 2))
    elif label == "query":
        body += words(rng, QUERY, rng.randint(1, 2))
    else:
        body += words(rng, COMMENT, rng.randint(1, 2))
    if rng.random() < 0.1:
        body.append(rng.choice(SWEAR))
    rng.shuffle(body)
    if rng.random() < 0.2:
        body = [w.upper() if rng.random() < 0.5 else w for w in body]
    text = " ".join(body)
    if label == "query":
        text += "?"
    elif rng.random() < 0.2:
        text += "!"
    if is_source and rng.random() < 0.5:
        text += " http://t.co/" + "".join(rng.choice("abcdefgh") for _ in range(6))
    return text


def reply_label(rng):
    r = rng.random()
    if r < 0.62:
        return "comment"
    if r < 0.74:
        return "query"
    if r < 0.86:
        return "deny"
    return "support"


def make_thread(rng, thread_id, n_replies):
    source_label = "support" if rng.random() < 0.85 else "deny"
    posts = [{"id": thread_id + "0", "text": make_text(rng, source_label, True), "parent_id": None,
              "has_url": False, "has_media": rng.random() < 0.3, "label": source_label}]
    for k in range(1, n_replies + 1):
        # Mostly direct replies to the source, some deeper chains.
        parent = posts[0] if rng.random() < 0.55 else rng.choice(posts)
        label = reply_label(rng)
        posts.append({"id": f"{thread_id}{k}", "text": make_text(rng, label, False),
                      "parent_id": parent["id"], "has_url": False,
                      "has_media": rng.random() < 0.05, "label": label})
    return {"thread_id": thread_id, "posts": posts}


def make_split(rng, prefix, n_threads, first_id):
    threads = []
    for t in range(n_threads):
        thread_id = str(first_id + 100 * t)
        threads.append(make_thread(rng, thread_id, rng.randint(4, 10)))
    return threads


def make_embeddings(rng, dim):
    vocab = TOPIC + SUPPORT + DENY + QUERY + COMMENT + SWEAR
    # Each stance group shares a direction so averaged vectors carry signal.
    centers = {}
    for name in ("topic", "support", "deny", "query", "comment", "swear"):
        v = [rng.gauss(0, 1) for _ in range(dim)]
        norm = math.sqrt(sum(x * x for x in v))
        centers[name] = [x / norm for x in v]
    groups = [("topic", TOPIC), ("support", SUPPORT), ("deny", DENY), ("query", QUERY),
              ("comment", COMMENT), ("swear", SWEAR)]
    lines = [f"{len(vocab)} {dim}"]
    for name, pool in groups:
        for w in pool:
            vec = [c + 0.3 * rng.gauss(0, 1) for c in centers[name]]
            lines.append(w + " " + " ".join(f"{x:.6f}" for x in vec))
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2016)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "demo"))
    ap.add_argument("--dim", type=int, default=16)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    splits = {"train": (12, 500000), "dev": (5, 600000), "test": (5, 700000)}
    for name, (n, first) in splits.items():
        with open(out / f"{name}.json", "w") as f:
            json.dump(make_split(rng, name, n, first), f, indent=1)
            f.write("\n")
    with open(out / "embeddings.txt", "w") as f:
        f.write(make_embeddings(rng, args.dim))


if __name__ == "__main__":
    main()
