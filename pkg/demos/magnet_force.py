"""Axial force between two coaxial 5 mm cube magnets versus face gap.

Compares the analytical cuboid force with the far-field dipole estimate.

    python3 demos/magnet_force.py
"""
import numpy as np

from rotpeh import MagnetConfig, magnet_force

edge = 5e-3
cfg = MagnetConfig(a1=edge, b1=edge, c1=edge, a2=edge, b2=edge, c2=edge, B1=1.2, B2=1.2, polarity="attracting")
moment = 1.2 * edge**3 / (4e-7 * np.pi)

print(f"{'gap mm':>7} {'Fz N':>10} {'dipole N':>10}")
for gap in (0.5e-3, 1e-3, 2e-3, 5e-3, 10e-3, 20e-3, 50e-3):
    z = edge + gap
    dipole = -3 * 4e-7 * np.pi * moment**2 / (2 * np.pi * z**4)
    print(f"{gap * 1e3:7.1f} {magnet_force(cfg, 0.0, 0.0, z)[2]:10.4f} {dipole:10.4f}")
