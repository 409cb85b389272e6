"""Pick a threshold from attack-free runs.

The calibration looks at the most DAOs any child originated toward its
parent and scales it by a safety factor.
"""
from rplsim.config import default_scenario
from rplsim.harness import calibrate_threshold

base = default_scenario("rpl", duration_s=300.0)
for safety in (1.0, 2.0, 4.0):
    print(f"safety {safety}: threshold {calibrate_threshold(base, [1, 2, 3], safety)}")
