"""Natural frequencies of the prototype versus rotation speed.

Prints the two-mode frequency map, the veering point and the speed at which
the linearised beam stops having a real two-mode set, then writes the map to
frequency_map.csv in the current directory.

    python3 demos/frequency_map.py
"""
import numpy as np

from rotpeh import HarvesterConfig, build_sections, frequency_map, resonances

sections = build_sections(HarvesterConfig())
fmap = frequency_map(sections, 2 * np.pi * np.arange(0.0, 20.01, 0.5), truncate=True)

print(f"{'drive Hz':>9} {'f1 Hz':>8} {'f2 Hz':>8} {'gap Hz':>8}")
for row in zip(fmap.drive_hz, fmap.f1, fmap.f2, fmap.gap_hz):
    print("{:9.2f} {:8.3f} {:8.3f} {:8.3f}".format(*row))
print(f"minimum gap at {fmap.veering_drive_hz():.2f} Hz drive")
if fmap.unstable_from is not None:
    print(f"no real two-mode set from {fmap.unstable_from / (2 * np.pi):.2f} Hz drive (centrifugal buckling)")

for r in resonances(sections, 5.0, 20.0):
    kind = "main-dominant" if r.main_dominant else "aux-dominant"
    print(f"resonance at {r.drive_hz:.3f} Hz drive ({kind})")

fmap.write_csv("frequency_map.csv")
