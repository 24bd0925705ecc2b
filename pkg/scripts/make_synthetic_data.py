#!/usr/bin/env python3
"""Emit the synthetic datasets used by the experiment scripts.

Writes three graph files into --out:
  families.jsonl   180 cycles/stars/near-cliques (labels 0/1/2)
  molecules.jsonl  200 decorated ring systems spanning 10 scaffolds
  strict.jsonl     50 graphs with strict hop rankings
"""

import argparse
from pathlib import Path

from sogtok.ingest import write_graph_file
from sogtok.smiles import parse_smiles, to_graph
from sogtok.synthetic import family_dataset, scaffold_smiles_set, strict_ranking_graphs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    write_graph_file(family_dataset(per_family=60, seed=args.seed), out / "families.jsonl")
    pairs = scaffold_smiles_set()
    families = sorted({fam for fam, _ in pairs})
    mols = []
    for i, (fam, smiles) in enumerate(pairs):
        g = to_graph(parse_smiles(smiles), graph_id=f"{fam}_{i:03d}")
        # synthetic binary target: family parity, so prompt/eval flows have labels
        mols.append(
            type(g)(
                id=g.id, nodes=g.nodes, edges=g.edges,
                label=families.index(fam) % 2, graph_text=g.graph_text,
            )
        )
    write_graph_file(mols, out / "molecules.jsonl")
    write_graph_file(strict_ranking_graphs(50, seed=11), out / "strict.jsonl")
    print(f"wrote families.jsonl (180), molecules.jsonl (200), strict.jsonl (50) -> {out}")


if __name__ == "__main__":
    main()
