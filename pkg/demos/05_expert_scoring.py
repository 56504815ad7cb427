"""Expert score capture and distribution statistics.

Each analyzed object is rated on two questions with a four-level
scale (4 = highly meaningful, 1 = not meaningful): Q1 rates the
retrieved stylistic parallels, Q2 the generated attribution. Scores
land in an append-only log; a rater re-submitting overwrites their
previous judgment while the audit trail keeps both.

Run:  python3 demos/05_expert_scoring.py
"""

import tempfile
from pathlib import Path

from provkit.evaluation import ScoreLog

workdir = Path(tempfile.mkdtemp(prefix="provkit-demo-"))
log = ScoreLog(workdir / "scores.jsonl")

# --- 1. five raters score thirty objects on both questions -------------
# synthetic judgments: harsher on retrieval (Q1) than on attribution (Q2)
q1_pattern = [1, 2, 2, 1, 3, 2, 1, 4, 2, 3]
q2_pattern = [2, 3, 3, 2, 4, 3, 1, 4, 3, 2]
for rater in range(1, 6):
    for obj in range(30):
        log.submit(f"object-{obj:02d}", "Q1", f"expert-{rater}", q1_pattern[(obj + rater) % 10])
        log.submit(f"object-{obj:02d}", "Q2", f"expert-{rater}", q2_pattern[(obj + rater) % 10])

for question in ("Q1", "Q2"):
    print(log.distribution(question).table())
    print()

# --- 2. overwrite semantics ---------------------------------------------
print("expert-1 reconsiders object-00 on Q1:")
before = log.distribution("Q1").counts
log.submit("object-00", "Q1", "expert-1", 4, comment="revised after seeing the drawing")
after = log.distribution("Q1").counts
print(f"  counts before {before}")
print(f"  counts after  {after}  (total unchanged: last write wins)")
print(f"  audit trail for that key: "
      f"{[e.score for e in log.audit('object-00', 'Q1', 'expert-1')]}")

# --- 3. the share of meaningful outcomes (scores 2-4) -------------------
q1 = log.distribution("Q1")
q2 = log.distribution("Q2")
print(f"\nmeaningful share: Q1 {q1.rounded()['meaningful_share']}%  "
      f"Q2 {q2.rounded()['meaningful_share']}%")
print("attribution quality (Q2) typically outruns retrieval quality (Q1)")
