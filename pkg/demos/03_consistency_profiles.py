"""Per-annotator consistency profiles and reliability aggregation.

A steady annotator repeats themselves within tolerance; an erratic one
swings across the scale; a framing-sensitive one is stable over time but
diverges across equivalent wordings of the same item.
"""

from prefaudit import build_profiles, reliability
from prefaudit.records import AnnotationRecord, Dataset


def r(rid, annotator, item, score, session=None, framing=None):
    return AnnotationRecord(
        record_id=rid, annotator_id=annotator, item_id=item, prompt_text=f"prompt {item}",
        score=score, scale_kind="continuous_0_100", session_id=session, framing_id=framing,
    )


records = []
for i in range(6):
    records += [
        r(f"s{i}a", "steady", f"i{i}", 60.0 + i, "s1"),
        r(f"s{i}b", "steady", f"i{i}", 63.0 + i, "s2"),
        r(f"e{i}a", "erratic", f"i{i}", 5.0 + i, "s1"),
        r(f"e{i}b", "erratic", f"i{i}", 90.0 - i, "s2"),
    ]
for i in range(4):
    # framing variants of one item, rated by both annotator types
    records += [
        r(f"f{i}a", "framed", f"v{i}", 80.0, framing="a"),
        r(f"f{i}b", "framed", f"v{i}", 15.0 + i, framing="b"),
        r(f"f{i}c", "steady", f"v{i}", 70.0, framing="a"),
        r(f"f{i}d", "steady", f"v{i}", 75.0, framing="b"),
    ]
# the framed annotator is temporally stable on repeats
for i in range(6):
    records += [
        r(f"t{i}a", "framed", f"w{i}", 40.0, "s1"),
        r(f"t{i}b", "framed", f"w{i}", 43.0, "s2"),
    ]

dataset = Dataset(records=records, scale_kind="continuous_0_100")
profiles = build_profiles(dataset, tau=15.0)

print(f"{'annotator':<10} {'temp':>6} {'frame':>6} {'reliability':>12}")
for name, profile in sorted(profiles.items()):
    temp = "-" if profile.temp is None else f"{profile.temp:.2f}"
    frame = "-" if profile.frame is None else f"{profile.frame:.2f}"
    print(f"{name:<10} {temp:>6} {frame:>6} {profile.reliability:>12.2f}")

framed = profiles["framed"]
print("\naggregation modes for the framing-sensitive annotator:")
for mode in ("weighted", "min", "hierarchical"):
    print(f"  {mode:<13} {reliability(framed, mode):.3f}")
