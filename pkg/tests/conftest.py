from __future__ import annotations

import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

# Property examples run fixed numeric code; wall-clock deadlines only
# add flakiness on loaded CI machines.
settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

sys.path.insert(0, str(Path(__file__).parent))
