"""How pool choice flips small-jury majority harm labels.

Low-inconsistency annotators judge the prompts harmful; high-inconsistency
annotators are permissive. Sampling five-person juries from the combined
pool versus either half shows which prompts change their majority label.
"""

from prefaudit import majority_label, pool_flip_simulation
from prefaudit.ratio import RatioRecord
from prefaudit.records import AnnotationRecord, Dataset

print("single jury:", majority_label([80.0, 62.0, 55.0, 20.0, 10.0]))  # 3 of 5 at or above 50

records = []
ratios = []
for i in range(6):
    ratios.append(RatioRecord(f"strict{i}", "harm", 5, 10.0, 40.0, 0.2 + 0.02 * i, 500, 0))
    ratios.append(RatioRecord(f"permissive{i}", "harm", 5, 50.0, 38.0, 1.3 + 0.05 * i, 500, 0))
for p in range(10):
    for i in range(6):
        records.append(
            AnnotationRecord(
                record_id=f"s{p}-{i}", annotator_id=f"strict{i}", item_id=f"prompt{p:02d}",
                prompt_text=f"prompt {p}", score=75.0 + i, scale_kind="continuous_0_100",
            )
        )
        permissive_score = 58.0 if (p < 3 and i < 2) else 25.0 + i
        records.append(
            AnnotationRecord(
                record_id=f"p{p}-{i}", annotator_id=f"permissive{i}", item_id=f"prompt{p:02d}",
                prompt_text=f"prompt {p}", score=permissive_score, scale_kind="continuous_0_100",
            )
        )

dataset = Dataset(records=records, scale_kind="continuous_0_100")
report = pool_flip_simulation(dataset, ratios, iterations=1000, sample_size=5, seed=3)

print(f"\neligible prompts: {report.n_eligible} of {report.n_total_prompts}")
print(f"flips using only low-inconsistency annotators:  {report.n_flips_low} ({report.pct_flips:.1f}%)")
print(f"flips using only high-inconsistency annotators: {report.n_flips_high} ({report.pct_flips_high:.1f}%)")
print("\nper-prompt modal labels (all / low / high):")
for prompt, labels in sorted(report.per_prompt.items()):
    marks = "".join("H" if labels[k] else "." for k in ("all", "low_inconsistency", "high_inconsistency"))
    print(f"  {prompt}: {marks}")
