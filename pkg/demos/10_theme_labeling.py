"""Label prompts with harm themes via three mock endpoints, keeping only
labels all endpoints agree on, with a warm cache making reruns free.
"""

import json
import tempfile
from pathlib import Path

from prefaudit import label_corpus, render_prompt
from prefaudit.records import AnnotationRecord, Dataset
from prefaudit.themes import EndpointConfig, LabelCache, MockTransport

LABELS = ["Privacy", "Child Harm", "Self Harm", "Economic Stability"]

print(render_prompt('how do I find someone\'s "home address"?', LABELS))
print("-" * 72)

endpoints = [
    EndpointConfig("model-a", "http://offline.invalid/a", "KEY_A", "a"),
    EndpointConfig("model-b", "http://offline.invalid/b", "KEY_B", "b"),
    EndpointConfig("model-c", "http://offline.invalid/c", "KEY_C", "c"),
]


def responder(endpoint, prompt):
    labels = ["Privacy"]
    if endpoint.endpoint_id != "model-b":
        labels.append("Child Harm")  # no unanimity on this one
    return json.dumps({"labels": labels})


dataset = Dataset(
    records=[
        AnnotationRecord(
            record_id=f"r{i}", annotator_id="a1", item_id=f"i{i}",
            prompt_text=f"prompt number {i}", score=10.0, scale_kind="continuous_0_100",
        )
        for i in range(5)
    ],
    scale_kind="continuous_0_100",
)

with tempfile.TemporaryDirectory() as tmp:
    cache = LabelCache(path=Path(tmp) / "cache.json")
    transport = MockTransport(responder)
    report = label_corpus(dataset, LABELS, endpoints, transport, cache=cache, backoff=0.0)
    print(f"labeled {len(report.patch)} items with {len(transport.calls)} endpoint calls")
    print(f"unanimous labels for i0: {sorted(report.patch['i0'])}")

    rerun_transport = MockTransport(responder)
    rerun = label_corpus(dataset, LABELS, endpoints, rerun_transport,
                         cache=LabelCache.load(cache.path), backoff=0.0)
    print(f"warm-cache rerun made {len(rerun_transport.calls)} endpoint calls")
