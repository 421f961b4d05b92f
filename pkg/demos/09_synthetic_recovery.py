"""End-to-end recovery check: generate annotators with known latent types,
run the diagnostics, and score the routing against the ground truth.
"""

from prefaudit import generate, plan_tier, route_annotators, score_recovery

plan = plan_tier(1, n_items=400 * 40, n_annotators=40, cost_per_annotation=0.0)
corpus = generate(10, plan.n_items, plan, seed=42, n_framing_pairs=10)
print(f"generated {len(corpus.dataset.records)} records for 40 annotators "
      f"({corpus.clamp_count} ratings clamped at the scale bounds)")

routes = route_annotators(corpus)
report = score_recovery(corpus, routes)

print(f"\nrouting accuracy: {report.accuracy:.2f}")
print(f"{'latent type':<14}", "->", "routing counts")
for latent, counts in sorted(report.confusion.items()):
    pretty = ", ".join(f"{route}={n}" for route, n in sorted(counts.items()))
    print(f"{latent:<14} -> {pretty}")
