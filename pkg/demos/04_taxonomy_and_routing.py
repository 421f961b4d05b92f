"""Classify flagged inconsistencies and route annotators by diagnostics.

Walks the canonical cases: a full-scale swing on a generic greeting, a
highly rated verbatim-echo failure, equivalent prompts rated 100 and 0, a
direction violation, and moderate same-side scores on value-laden content.
"""

from prefaudit import (
    classify_flag,
    decision_procedure,
)
from prefaudit.diagnostics import ConsistencyProfile
from prefaudit.pairing import InconsistencyFlag, PromptPair
from prefaudit.records import ItemMetadata


def flag(score_a, score_b, kind="identical", expected=None):
    if kind == "identical":
        pair = PromptPair("p|p", "p", "p", 1.0, "identical")
    else:
        pair = PromptPair("p|q", "p", "q", 0.9, kind, expected_direction=expected)
    return InconsistencyFlag("a1", pair, score_a, score_b, abs(score_a - score_b), 15.0)


cases = [
    ("greeting rated 10 then 100", flag(10.0, 100.0),
     ItemMetadata("p", content_type="A1_generic", response_quality="B1_good",
                  plausible_pref="E1_implausible")),
    ("echo response rated 47 and 1", flag(47.0, 1.0),
     ItemMetadata("p", response_quality="B2_bad")),
    ("equivalent prompts rated 100 and 0", flag(100.0, 0.0, kind="equivalent"), None),
    ("more harmful prompt rated lower", flag(100.0, 6.0, kind="directional", expected="b_more"), None),
    ("value-laden content rated 63 and 85", flag(63.0, 85.0),
     ItemMetadata("p", content_type="A4_value_laden", plausible_pref="E3_plausible")),
]

for title, f, meta in cases:
    label = classify_flag(f, meta)
    print(f"{title}:")
    print(f"  label = {label.label}")
    print(f"  trace = {' > '.join(label.rule_trace)}")

print("\nannotator routing:")
profiles = {
    "random responder": ConsistencyProfile("x", temp=0.28, frame=0.3),
    "framing sensitive": ConsistencyProfile("y", temp=0.95, frame=0.3),
    "task confused": ConsistencyProfile("z", temp=0.9, frame=0.9),
    "solid": ConsistencyProfile("w", temp=0.95, frame=0.9),
}
artifact_rates = {"task confused": 0.4}
for name, profile in profiles.items():
    route = decision_procedure(profile, artifact_rate=artifact_rates.get(name))
    print(f"  {name:<18} -> {route}")
