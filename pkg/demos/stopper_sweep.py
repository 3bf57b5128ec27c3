"""Up and down frequency sweeps with and without the main-tip stopper.

Shows the stopper's hardening: contact persists to a higher drive on the
up-sweep than on the down-sweep.  Takes about a minute (440 steps).

    python3 demos/stopper_sweep.py
"""
from rotpeh import (BandwidthError, HarvesterConfig, ModelFamily, SweepPlan, bandwidth, power_area,
                    stopper_preset, sweep)

BAND = (11.0, 16.5, 0.05)
config = HarvesterConfig()
cases = {"baseline": (), "stopper A, 14.4 mm": (stopper_preset("A", d=14.4e-3),)}

for name, stoppers in cases.items():
    family = ModelFamily(config, stoppers=stoppers)
    for direction in ("up", "down"):
        curve = sweep(family, SweepPlan(direction, *BAND))
        line = f"{name:20s} {direction:4s} area {power_area(curve):.4f} mW*Hz"
        if stoppers:
            hit = curve.f[curve.contacts[:, 0] > 0]
            if hit.size:
                line += f", contact {hit.min():.2f}-{hit.max():.2f} Hz"
        try:
            line += ", bands " + ", ".join(f"{b.f_low:.2f}-{b.f_high:.2f}" for b in bandwidth(curve))
        except BandwidthError as exc:
            line += f", no bandwidths ({exc})"
        print(line)
        curve.write_csv(f"sweep_{'stopper' if stoppers else 'baseline'}_{direction}.csv")
