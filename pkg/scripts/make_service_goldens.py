"""Regenerate the service golden and the frontend stub fixtures.

Rebuilds the exact fixture artifact the test suite uses (same seeds and
configs as tests/conftest.py), runs the serving path for two fixture
drafts, and freezes the responses:

  tests/data/golden_service_top3.json      top-3 for draft A
  frontend/tests/fixtures/draft_a_response.json
  frontend/tests/fixtures/draft_b_response.json
  frontend/tests/fixtures/golden_diff.json rank movements A -> B
  frontend/tests/fixtures/journals.json

Run from the repo root: python scripts/make_service_goldens.py
"""

import copy
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]

from simrec.contrastive import ContrastiveConfig, finetune
from simrec.corpus import CorpusSplit, build_pair_dataset, hash_split_assignment
from simrec.encoders import ToyTransformerEncoder
from simrec.recommender import DownstreamConfig, train_downstream
from simrec.server import RecommendRequest, handle_recommend
from simrec.synthetic import make_synthetic_corpus

DRAFT_A = {
    "title": "zago numi domu loguca ruma",
    "abstract": "dosacu sofece demozo loguca lubu cure fapo gibe numo",
    "keywords": ["tiroro", "cutara", "gibe"],
    "k": 10,
}
# draft B pulls abstract and keywords toward a second journal's vocabulary
DRAFT_B = {
    "title": "zago numi domu loguca ruma",
    "abstract": "tulo racare dune foda luba tinepa bape mene vede zove",
    "keywords": ["tulo", "racare", "foda", "pidive"],
    "k": 10,
}


def build_fixture_model():
    papers, journals = make_synthetic_corpus(n_journals=8, docs_per_journal=25, seed=7)
    train = [p for p in papers if hash_split_assignment(p.id) == "train"]
    test = [p for p in papers if hash_split_assignment(p.id) != "train"]
    split = CorpusSplit(train=train, test=test, journals=journals)
    pairs = build_pair_dataset(split)
    texts = [t for pair in pairs.pairs for t in pair]
    encoder = ToyTransformerEncoder.from_texts(texts, seed=13)
    encoder, _ = finetune(encoder, pairs, ContrastiveConfig(seed=13))
    return train_downstream(copy.deepcopy(encoder), split, "TAK",
                            DownstreamConfig(seed=13, epochs=30))


def rank_movements(a_items, b_items):
    """Per-journal rank change between two rankings (1-based ranks)."""
    rank_a = {item["journal_id"]: i + 1 for i, item in enumerate(a_items)}
    rank_b = {item["journal_id"]: i + 1 for i, item in enumerate(b_items)}
    movements = []
    for jid in sorted(set(rank_a) | set(rank_b)):
        ra, rb = rank_a.get(jid), rank_b.get(jid)
        if ra != rb:
            movements.append({"journal_id": jid, "from": ra, "to": rb})
    return movements


def main() -> None:
    model = build_fixture_model()
    response_a = handle_recommend(model, RecommendRequest(**DRAFT_A))
    response_b = handle_recommend(model, RecommendRequest(**DRAFT_B))

    golden_dir = ROOT / "tests" / "data"
    golden_dir.mkdir(parents=True, exist_ok=True)
    golden = {
        "request": DRAFT_A,
        "top3": response_a["items"][:3],
        "model_info": response_a["model_info"],
    }
    (golden_dir / "golden_service_top3.json").write_text(
        json.dumps(golden, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print("wrote tests/data/golden_service_top3.json")
    print("top3:", [i["journal_id"] for i in response_a["items"][:3]])

    fixtures = ROOT / "frontend" / "tests" / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    (fixtures / "draft_a_request.json").write_text(
        json.dumps(DRAFT_A, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (fixtures / "draft_b_request.json").write_text(
        json.dumps(DRAFT_B, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (fixtures / "draft_a_response.json").write_text(
        json.dumps(response_a, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (fixtures / "draft_b_response.json").write_text(
        json.dumps(response_b, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (fixtures / "golden_diff.json").write_text(
        json.dumps(rank_movements(response_a["items"], response_b["items"]),
                   indent=2, sort_keys=True) + "\n", encoding="utf-8")
    journals = [{"journal_id": j.journal_id, "name": j.name} for j in model.journals]
    (fixtures / "journals.json").write_text(
        json.dumps(journals, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print("wrote frontend/tests/fixtures/*.json")
    print("diff movements:",
          json.loads((fixtures / "golden_diff.json").read_text()))


if __name__ == "__main__":
    main()
