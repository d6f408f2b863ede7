#!/usr/bin/env python3
"""Build data/UMLS in OpenKE format from the upstream UMLS triple files.

The UMLS biomedical knowledge base (135 entities, 46 relations, 6529 facts)
is distributed as head<TAB>relation<TAB>tail text files. This script pools
all facts, assigns ids over the sorted vocabularies, and draws a fixed
5327/569/633 train/valid/test split (seed 12) such that every entity and
relation occurs at least once in the training split.

Usage:
    python3 scripts/make_umls_split.py <upstream_dir> <output_dir>

<upstream_dir> must contain train.txt / valid.txt / test.txt (any grouping
of the 6529 facts works; the files are pooled before splitting).
"""

import random
import sys
from pathlib import Path

SPLIT_SIZES = (5327, 569, 633)
SEED = 12


def read_triples(directory: Path):
    triples = set()
    for name in ("train.txt", "valid.txt", "test.txt"):
        path = directory / name
        if not path.exists():
            continue
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            head, relation, tail = line.split("\t")
            triples.add((head, relation, tail))
    return sorted(triples)


def split_with_train_coverage(triples, rng):
    """Shuffle, then move one fact per uncovered entity/relation into train."""
    shuffled = triples[:]
    rng.shuffle(shuffled)
    n_train, n_valid, n_test = SPLIT_SIZES
    assert n_train + n_valid + n_test == len(shuffled)

    train = shuffled[:n_train]
    rest = shuffled[n_train:]

    covered_entities = {h for h, _, t in train} | {t for h, _, t in train}
    covered_relations = {r for _, r, _ in train}

    for i, (h, r, t) in enumerate(rest):
        if h in covered_entities and t in covered_entities and r in covered_relations:
            continue
        # Swap with the train fact least needed for coverage (scan back to front).
        for j in range(n_train - 1, -1, -1):
            h2, r2, t2 = train[j]
            still_ok = (
                sum(1 for h3, _, t3 in train if h3 == h2 or t3 == h2) > 1
                or h2 in (h, t)
            ) and (
                sum(1 for h3, _, t3 in train if h3 == t2 or t3 == t2) > 1
                or t2 in (h, t)
            ) and (sum(1 for _, r3, _ in train if r3 == r2) > 1 or r2 == r)
            if still_ok:
                train[j], rest[i] = rest[i], train[j]
                break
        covered_entities = {h for h, _, t in train} | {t for h, _, t in train}
        covered_relations = {r for _, r, _ in train}

    assert len(covered_entities) == 135 and len(covered_relations) == 46
    return train, rest[:n_valid], rest[n_valid:]


def write_openke(out_dir: Path, triples_by_split, entities, relations):
    out_dir.mkdir(parents=True, exist_ok=True)
    ent_id = {e: i for i, e in enumerate(entities)}
    rel_id = {r: i for i, r in enumerate(relations)}

    with open(out_dir / "entity2id.txt", "w") as f:
        f.write(f"{len(entities)}\n")
        for e, i in ent_id.items():
            f.write(f"{e}\t{i}\n")
    with open(out_dir / "relation2id.txt", "w") as f:
        f.write(f"{len(relations)}\n")
        for r, i in rel_id.items():
            f.write(f"{r}\t{i}\n")
    for name, triples in triples_by_split.items():
        with open(out_dir / f"{name}2id.txt", "w") as f:
            f.write(f"{len(triples)}\n")
            for h, r, t in triples:
                # OpenKE column order: head tail relation.
                f.write(f"{ent_id[h]} {ent_id[t]} {rel_id[r]}\n")


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    upstream, out_dir = Path(sys.argv[1]), Path(sys.argv[2])

    triples = read_triples(upstream)
    assert len(triples) == sum(SPLIT_SIZES), f"expected 6529 facts, got {len(triples)}"

    entities = sorted({h for h, _, _ in triples} | {t for _, _, t in triples})
    relations = sorted({r for _, r, _ in triples})
    assert len(entities) == 135 and len(relations) == 46

    train, valid, test = split_with_train_coverage(triples, random.Random(SEED))
    write_openke(out_dir, {"train": train, "valid": valid, "test": test},
                 entities, relations)
    print(f"wrote {out_dir}: train={len(train)} valid={len(valid)} test={len(test)}")


if __name__ == "__main__":
    main()
