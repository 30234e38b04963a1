"""Synthetic electrospinning data with a known ground-truth law.

The generator builds rows in the canonical schema whose diameters follow
a smooth nonlinear response: a per-polymer power law in concentration, a
bell-shaped voltage response, a saturating flow-rate effect, and mild
environmental terms, all under multiplicative lognormal noise.
Polymer-dependent exponents make the surface strongly interactive, so
tree ensembles can fit it while a plain linear model cannot. Solvent
systems only use combinations the bundled solubility table accepts.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .dataset import ALL_COLUMNS

# polymer -> (base nm, concentration exponent, mix weight, solvent systems)
_POLYMERS: dict[str, tuple[float, float, float, list[tuple[str, ...]]]] = {
    "PAN": (210.0, 1.1, 0.21, [("DMF",), ("DMF", "DMSO")]),
    "PVA": (260.0, 0.6, 0.24, [("Water",), ("Water", "Ethanol")]),
    "PCL": (350.0, 1.8, 0.16, [("Chloroform",), ("Chloroform", "DMF")]),
    "PS": (600.0, 2.3, 0.12, [("THF",), ("DMF", "THF")]),
    "PVDF": (480.0, 1.4, 0.14, [("DMF",), ("DMF", "Acetone")]),
    "PLA": (380.0, 2.0, 0.08, [("Chloroform",), ("DCM",)]),
    "PET": (420.0, 1.5, 0.05, [("TFE",), ("HFIP",)]),
}

_SOLVENT_FACTOR = {
    "DMF": 1.0,
    "DMSO": 1.08,
    "Water": 1.10,
    "Ethanol": 0.92,
    "Chloroform": 0.97,
    "THF": 0.90,
    "Acetone": 0.85,
    "DCM": 0.95,
    "TFE": 1.00,
    "HFIP": 1.02,
}

_COLLECTORS = ("drum", "plate", "wire", "")
_COLLECTOR_P = (0.55, 0.40, 0.005, 0.045)


def true_diameter(
    polymer: str,
    solvents: dict[str, float],
    concentration: float,
    needle: float,
    rotation: float,
    voltage: float,
    flow: float,
    distance: float,
    temperature: float,
    humidity: float,
) -> float:
    """Noise-free diameter (nm) under the generator's response law."""
    base, conc_exp, _, _ = _POLYMERS[polymer]
    mix = sum(_SOLVENT_FACTOR[s] * r for s, r in solvents.items()) / 100.0
    d = base
    d *= (concentration / 15.0) ** conc_exp
    d *= 0.75 + 0.85 * np.exp(-(((voltage - 18.0) / 6.0) ** 2))
    d *= 0.70 + 0.30 * np.tanh((flow - 1.5) / 1.2)
    d *= 1.0 + 0.12 * np.sin(distance / 2.5)
    d *= 1.0 - 0.003 * (humidity - 45.0)
    d *= 1.0 - 0.00004 * rotation
    d *= 1.0 + 0.08 * (needle - 0.8)
    d *= 1.0 - 0.004 * (temperature - 25.0)
    d *= mix
    return float(d)


def generate_frame(
    n: int,
    seed: int = 0,
    noise: float = 0.10,
    missing_rate: float = 0.04,
) -> pd.DataFrame:
    """Rows in the canonical column order, ready for ingestion or training."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    polymers = list(_POLYMERS)
    weights = np.array([_POLYMERS[p][2] for p in polymers])
    weights = weights / weights.sum()

    rows = []
    for i in range(n):
        polymer = str(rng.choice(polymers, p=weights))
        systems = _POLYMERS[polymer][3]
        system = systems[int(rng.integers(len(systems)))]
        if len(system) == 1:
            ratios = [100.0]
        else:
            major = float(rng.uniform(60.0, 90.0))
            ratios = [major, 100.0 - major]
        conc = float(rng.uniform(5.0, 25.0))
        needle = float(rng.uniform(0.4, 1.2))
        rotation = float(rng.uniform(0.0, 2000.0))
        voltage = float(rng.uniform(8.0, 30.0))
        flow = float(rng.uniform(0.2, 5.0))
        distance = float(rng.uniform(8.0, 25.0))
        temperature = float(rng.uniform(20.0, 30.0))
        humidity = float(rng.uniform(30.0, 60.0))
        collector = str(rng.choice(_COLLECTORS, p=_COLLECTOR_P))

        d = true_diameter(
            polymer,
            dict(zip(system, ratios)),
            conc,
            needle,
            rotation,
            voltage,
            flow,
            distance,
            temperature,
            humidity,
        )
        d *= float(np.exp(rng.normal(0.0, noise)))

        row = {
            "doi": f"10.5555/synth.{i:05d}",
            "polymer": polymer,
            "solvent_1": system[0],
            "solvent_2": system[1] if len(system) > 1 else "",
            "solvent_3": "",
            "solvent1_ratio": ratios[0],
            "solvent2_ratio": ratios[1] if len(system) > 1 else 0.0,
            "solvent3_ratio": 0.0,
            "solution_concentration": conc,
            "needle_diameter": needle,
            "collector_type": collector,
            "rotation_speed": rotation,
            "voltage": voltage,
            "flow_rate": flow,
            "distance": distance,
            "temperature": temperature,
            "humidity": humidity,
            "fiber_diameter": d,
        }
        for col in ("rotation_speed", "temperature", "humidity"):
            if rng.uniform() < missing_rate:
                row[col] = np.nan
        rows.append(row)
    return pd.DataFrame(rows, columns=list(ALL_COLUMNS))


def write_fixture(path: str, n: int, seed: int = 0, noise: float = 0.10) -> pd.DataFrame:
    """Generate and save a CSV fixture; returns the frame."""
    frame = generate_frame(n, seed=seed, noise=noise)
    frame.to_csv(path, index=False)
    return frame
