"""Walkthrough: layering trace categories to attribute a shared artifact.

Two fictional programs, ActionX and ActionY, both refresh a pair of shared
cache objects when they run.  ActionX additionally leaves traces of its own:
two objects it always touches (core) and three it touches irregularly
(supporting).  Starting from seven observed timestamps we recover two
executions of ActionX and then, by elimination, one execution of ActionY.
"""

import calendar

from tracerecon import ObjectRecord, parse_signature_pack, reconstruct
from tracerecon.engine import analyze_action, shared_attributions


def utc(y, mo, d, h, mi, s):
    return calendar.timegm((y, mo, d, h, mi, s, 0, 0, 0))


def show(label, value):
    print(f"  {label}: {value}")


# The post-mortem observation: one surviving "modified" time per object.
OBSERVED = {
    "o1": utc(2010, 4, 14, 19, 28, 25),  # ActionX, always updated
    "o2": utc(2010, 4, 14, 19, 28, 32),  # ActionX, always updated
    "o3": utc(2010, 4, 14, 19, 28, 18),  # ActionX, irregular
    "o4": utc(2010, 4, 14, 19, 28, 34),  # ActionX, irregular
    "o5": utc(2010, 4, 14, 15, 13, 25),  # ActionX, irregular (stale!)
    "o6": utc(2010, 4, 14, 19, 28, 25),  # shared by ActionX and ActionY
    "o7": utc(2010, 5, 2, 9, 45, 2),     # shared by ActionX and ActionY
}

PACK = parse_signature_pack("""
action: ActionX
threshold: 30
core modified .*/objects/o1$
core modified .*/objects/o2$
support modified .*/objects/o3$
support modified .*/objects/o4$
support modified .*/objects/o5$
shared modified .*/objects/o6$
shared modified .*/objects/o7$
---
action: ActionY
threshold: 30
shared modified .*/objects/o6$
shared modified .*/objects/o7$
""")

objects = [
    ObjectRecord(path=f"C:/example/objects/{name}", modified=value)
    for name, value in OBSERVED.items()
]

print("Step 1 - ActionX on its own evidence")
print("------------------------------------")
result = analyze_action(PACK.get("ActionX"), objects)
show("core verdict", result.core_verdict.status.value)
for instance in result.instances:
    show(
        f"{instance.rank.value} instance",
        f"anchored at {instance.detected} "
        f"(window {instance.interval.start}..{instance.interval.end}, "
        f"{len(instance.evidence)} trace values)",
    )
print()
print("The two always-updated values sit 7 seconds apart, well inside the")
print("30-second update threshold, so they describe a single execution.")
print("Two irregular values merge into that window and the stale third one")
print("proves a separate, earlier execution.")
print()

print("Step 2 - the shared cache objects")
print("---------------------------------")
for attribution in shared_attributions(PACK, objects, {"ActionX": result}):
    claim = attribution.resolved or "unresolved - either action fits"
    show(f"shared value {attribution.cluster.oldest}", claim)
print()
print("The first shared value falls inside ActionX's known window, and")
print("ActionY cannot be excluded either, so no conclusion is drawn from it.")
print("The second one is newer than anything ActionX can explain (its last")
print("always-updated traces would have moved too), leaving only ActionY.")
print()

print("Step 3 - the assembled timeline, newest first")
print("---------------------------------------------")
for approx in reconstruct(objects, PACK):
    print(
        f"  {approx.action_name:8s} {approx.rank.value:10s} "
        f"window {approx.interval.start}..{approx.interval.end}  [{approx.note.value}]"
    )
