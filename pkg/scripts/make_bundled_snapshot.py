#!/usr/bin/env python3
"""Regenerate the bundled UK pork monthly snapshot.

The original DEFRA/AHDB tables cannot be redistributed or re-scraped here,
so the package ships a model-consistent reconstruction: the calibrated UK
parameter set is integrated over 2015-01..2019-12 and observation noise at
realistic levels is applied, with the breeding herd reported only at the
June/December survey months. New supplies are then derived by the loader
from the noisy production/imports/exports columns, exactly as they would
be from the published tables.

Run from the repository root:

    python scripts/make_bundled_snapshot.py
"""

from pathlib import Path

from foodsys.data import UK_CALIBRATION, UK_CALIBRATION_C0, save_csv
from foodsys.inference import ObservationNoise, simulate_dataset
from foodsys.model import fast_subsystem_equilibrium

OUT = Path(__file__).resolve().parents[1] / "src" / "foodsys" / "_data" / "uk_pork_monthly.csv"

NOISE = ObservationNoise(
    sigma_herd=0.02,       # June/December surveys are precise
    sigma_supplies=0.04,   # unused in the CSV: supplies are derived on load
    sigma_price=0.06,      # the all-pig price swings more than the model
    eps_production=0.04,
    eps_imports=0.08,
    eps_exports=0.10,
)
SEED = 20150101


def main() -> None:
    init = fast_subsystem_equilibrium(UK_CALIBRATION, UK_CALIBRATION_C0)
    data = simulate_dataset(UK_CALIBRATION, init, NOISE, n_months=60,
                            anchor="2015-01", seed=SEED)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    save_csv(data, OUT)
    print(f"wrote {OUT} ({data.n_months} months, "
          f"{int((~__import__('numpy').isnan(data.herd)).sum())} herd surveys)")


if __name__ == "__main__":
    main()
