"""Walkthrough: scanning real-world-shaped metadata with the shipped packs.

The test fixtures model two Windows XP machines whose file systems were
exported to bodyfiles.  The packaged signature packs describe how opening
Firefox 3.6 (threshold 50 s) and Internet Explorer 8 (threshold 61 s) mark
prefetch files, profile databases and cookies.  Reconstruction recovers the
most recent execution of each browser and a trail of older ones.
"""

from datetime import datetime, timezone
from pathlib import Path

from tracerecon import load_metadata, merge_packs, parse_signature_pack, reconstruct

ROOT = Path(__file__).parent.parent
SIG_DIR = ROOT / "src" / "tracerecon" / "data" / "signatures"
FIXTURES = ROOT / "tests" / "fixtures"


def iso(value):
    return datetime.fromtimestamp(value, tz=timezone.utc).strftime("%Y-%m-%d %H:%M:%S")


pack = merge_packs(
    [
        parse_signature_pack((SIG_DIR / "ff3.sig").read_text()),
        parse_signature_pack((SIG_DIR / "ie8.sig").read_text()),
    ]
)

for computer in ("computer1", "computer2"):
    records = load_metadata(FIXTURES / f"{computer}.body")
    print(f"{computer}: {len(records)} metadata records")
    print("-" * 64)
    for approx in reconstruct(records, pack):
        marker = "*" if approx.rank.value == "MostRecent" else " "
        print(
            f" {marker} {approx.action_name:9s} ran at/just before {iso(approx.detected)}"
            f"  ({approx.note.value}, {len(approx.evidence)} trace values)"
        )
    print()

print("Legend: * marks the most recent execution of each action. On computer 1")
print("the two Firefox detections 98 minutes apart carry the parallel-instance")
print("diagnostic: both always-updated objects should move on every run, so")
print("disagreeing values mean two overlapping instances (one of them held an")
print("object locked while the other ran).")
