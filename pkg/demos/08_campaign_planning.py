"""Design diagnostic structure for an annotation campaign and calibrate thresholds.

Reproduces the canonical costing: 10,000 items across 5 annotators at $0.50
per annotation, with 5% repeats, costs $250 extra (5% overhead).
"""

from prefaudit import (
    assign_diagnostics,
    calibrate_consequence,
    calibrate_empirical,
    calibrate_scale,
    plan_tier,
    validate_schedule,
)

for tier in (1, 2, 3):
    plan = plan_tier(tier, n_items=10_000, n_annotators=5, cost_per_annotation=0.50)
    print(
        f"tier {tier}: {plan.n_repeats_per_annotator} repeats/annotator, "
        f"{plan.n_framing_pairs_per_annotator} framing pairs, "
        f"+{plan.extra_annotations} annotations = ${plan.extra_cost:.0f} "
        f"({plan.overhead_pct:.1f}% overhead)"
    )

plan = plan_tier(1, 10_000, 5, 0.50)
schedule = assign_diagnostics(
    plan,
    item_ids=[f"item-{i:05d}" for i in range(10_000)],
    annotator_ids=[f"ann-{i}" for i in range(5)],
    seed=42,
)
violations = validate_schedule(schedule)
print(f"\nschedule entries: {len(schedule.entries)}, validator violations: {len(violations)}")
first = schedule.for_annotator("ann-0")
repeats = [e for e in first if e.kind == "repeat"]
print(f"ann-0: {len(first)} tasks, first repeat at position {repeats[0].position} "
      f"(session {repeats[0].session_id})")

print("\nthreshold calibration:")
clear_case_diffs = [2.0, 4.0, 5.0, 3.0, 6.0, 4.0, 5.0, 7.0, 3.0, 5.0, 6.0, 4.0]
empirical = calibrate_empirical(clear_case_diffs, k=2.0)
print(f"  empirical: consistent <= {empirical.consistent_max:.1f} ({empirical.basis})")
for scale in ("continuous_0_100", "likert_5", "binary_pair"):
    cal = calibrate_scale(scale)
    print(f"  {scale}: consistent <= {cal.consistent_max:g}, marginal <= {cal.marginal_max:g}")
consequence = calibrate_consequence("continuous_0_100", flip_margin=10.0)
print(f"  consequence: consistent <= {consequence.consistent_max:g} ({consequence.basis})")
