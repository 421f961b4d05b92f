"""Within-theme inconsistency ratios against each annotator's own baseline.

The structured annotator rates one theme tightly while ranging widely
elsewhere (ratio well below 1); the unstructured annotator's theme ratings
look like a random grouping of their history (ratio near 1).
"""

import numpy as np

from prefaudit import RatioConfig, all_ratios, interpret_ratio, population_stats
from prefaudit.records import AnnotationRecord, Dataset, ItemMetadata

rng = np.random.default_rng(7)
records = []
metadata = {}


def add(annotator, item, score, theme=None):
    records.append(
        AnnotationRecord(
            record_id=f"r{len(records)}", annotator_id=annotator, item_id=item,
            prompt_text=f"prompt {item}", score=float(np.clip(score, 0, 100)),
            scale_kind="continuous_0_100",
        )
    )
    if theme:
        metadata[item] = ItemMetadata(item_id=item, theme_labels=frozenset({theme}))


for a in range(3):
    structured = f"structured{a}"
    unstructured = f"unstructured{a}"
    for i in range(8):
        add(structured, f"s{a}-harm{i}", 78 + rng.normal(0, 2), theme="privacy")
        add(unstructured, f"u{a}-harm{i}", rng.uniform(0, 100), theme="privacy")
    for i in range(12):
        add(structured, f"s{a}-misc{i}", rng.uniform(0, 100))
        add(unstructured, f"u{a}-misc{i}", rng.uniform(0, 100))

dataset = Dataset(records=records, scale_kind="continuous_0_100", metadata=metadata)
ratios = all_ratios(dataset, RatioConfig(resamples=2000, seed=11))

print(f"{'annotator':<15} {'theme':<9} {'var_within':>10} {'baseline':>10} {'ratio':>7}  band")
for record in ratios:
    print(
        f"{record.annotator_id:<15} {record.theme:<9} {record.var_within:>10.1f} "
        f"{record.baseline:>10.1f} {record.ratio:>7.3f}  {interpret_ratio(record.ratio)}"
    )

report = population_stats(ratios, dataset)
print(f"\nannotator mean ratios vs 1.0: t = {report.t_vs_one.statistic:.2f} (p = {report.t_vs_one.p_value:.3g})")
if report.median_split is not None:
    print(
        f"median split on ratings: t = {report.median_split.statistic:.2f}, "
        f"low-pool minus high-pool mean = {report.mean_diff_low_minus_high:.2f}"
    )
if report.pearson_r_ratio_vs_rating is not None:
    print(f"ratio vs mean rating: r = {report.pearson_r_ratio_vs_rating:.2f}")
