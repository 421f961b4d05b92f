"""Turn diagnostics into training-ready weights and a filtered export.

Also decomposes total rating variance into test-retest error versus
preference variance.
"""

import tempfile
from pathlib import Path

from prefaudit import build_profiles, build_weights, export_weighted, variance_decomposition
from prefaudit.records import AnnotationRecord, Dataset


def r(rid, annotator, item, score, session):
    return AnnotationRecord(
        record_id=rid, annotator_id=annotator, item_id=item, prompt_text=f"prompt {item}",
        score=score, scale_kind="continuous_0_100", session_id=session,
    )


records = []
for i in range(8):
    records += [
        r(f"g{i}a", "careful", f"i{i}", 55.0 + 2 * i, "s1"),
        r(f"g{i}b", "careful", f"i{i}", 57.0 + 2 * i, "s2"),
        r(f"n{i}a", "noisy", f"i{i}", 10.0 + 3 * i, "s1"),
        r(f"n{i}b", "noisy", f"i{i}", 88.0 - 3 * i, "s2"),
    ]
dataset = Dataset(records=records, scale_kind="continuous_0_100")

profiles = build_profiles(dataset, tau=15.0)
for mode in ("linear", "binary", "sigmoid"):
    table = build_weights(dataset, profiles, mode=mode, threshold=0.5)
    careful = [table.record_weights[x.record_id] for x in records if x.annotator_id == "careful"]
    noisy = [table.record_weights[x.record_id] for x in records if x.annotator_id == "noisy"]
    print(f"{mode:<8} careful mean weight {sum(careful)/len(careful):.3f}   "
          f"noisy mean weight {sum(noisy)/len(noisy):.3f}")

decomposition = variance_decomposition(dataset, tau=15.0)
print(f"\nvariance: total {decomposition.var_total:.1f} = "
      f"test-retest error {decomposition.var_artifact:.1f} + "
      f"preference {decomposition.var_preference:.1f}"
      + ("  [floored]" if decomposition.floored else ""))

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "weighted.jsonl"
    table = build_weights(dataset, profiles, mode="binary", threshold=0.5)
    summary = export_weighted(dataset, table, policy="filter", path=out)
    print(f"\nfilter export: retained {summary.n_retained} of {summary.n_input} "
          f"(dropped {summary.n_dropped})")
