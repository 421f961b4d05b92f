"""Find semantically similar prompt pairs and flag score inconsistencies.

Two items share an embedding (an exact repeat under different ids), a third
is close, a fourth unrelated. The same annotator scores the near-duplicates
very differently, which the flagging stage catches; the filter ladder then
narrows flags down to exact test-retest cases.
"""

from prefaudit import (
    Dataset,
    EmbeddingTable,
    filter_ladder,
    find_similar_pairs,
    flag_inconsistencies,
    standard_ladder_stages,
)
from prefaudit.records import AnnotationRecord

embeddings = EmbeddingTable.from_rows([
    ("q1", [0.9, 0.1, 0.0]),
    ("q2", [0.9, 0.1, 0.0]),       # identical content to q1
    ("q3", [0.88, 0.2, 0.05]),     # paraphrase-close
    ("q4", [0.0, 0.0, 1.0]),       # unrelated
])


def r(rid, annotator, item, score, response):
    return AnnotationRecord(
        record_id=rid, annotator_id=annotator, item_id=item,
        prompt_text="can you bury a geocache?", score=score,
        scale_kind="continuous_0_100", response_text=response, model_id="m1",
    )


dataset = Dataset(
    records=[
        r("r1", "a1", "q1", 89.0, "yes, with the owner's permission..."),
        r("r2", "a1", "q2", 15.0, "yes, with the owner's permission..."),
        r("r3", "a1", "q3", 80.0, "a different response"),
        r("r4", "a1", "q4", 55.0, "unrelated"),
    ],
    scale_kind="continuous_0_100",
    embeddings=embeddings,
)

pairs = find_similar_pairs(dataset, sim_threshold=0.9, same_annotator=True)
print("similar pairs at threshold 0.9:")
for pair in pairs:
    print(f"  {pair.item_a} ~ {pair.item_b}  sim={pair.similarity:.4f}  kind={pair.kind}")

flags, summary = flag_inconsistencies(dataset, pairs, delta_threshold=15.0)
print(f"\nflags: {summary.n_inconsistent_pairs} of {summary.n_evaluated_pairs} evaluated pairs")
print(f"mean delta over flags: {summary.mean_delta:.1f}")

ladder = filter_ladder(flags, standard_ladder_stages(dataset))
print("\nfilter ladder (surviving flags):")
for stage, count in ladder.stages:
    print(f"  {stage:<20} {count}")
