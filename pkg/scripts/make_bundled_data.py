"""Regenerate the files under src/ecgfuse/data/.

    python scripts/make_bundled_data.py

noise_{bw,em,ma}.csv  10 s, 500 Hz synthetic noise stand-ins (seed 20261016)
sample_12lead.csv     4 s, 500 Hz 12-lead ECG composed from the synthetic VCG

The 12-lead sample maps the VCG to V1-V6, I, II with the least-squares
inverse of the inverse-Dower matrix, then derives III, aVR, aVL, aVF from
I and II. It is a pipeline fixture, not a physiological forward model.
"""

from pathlib import Path

import numpy as np

from ecgfuse.recordio import write_record
from ecgfuse.synthgen import NOISE_KINDS, standin_noise, synth_vcg
from ecgfuse.vcgprep import EIGHT_LEADS, INVERSE_DOWER, TWELVE_LEADS, MultiLeadRecord

SEED = 20261016
DATA = Path(__file__).resolve().parents[1] / "src" / "ecgfuse" / "data"


def twelve_from_vcg(vcg: MultiLeadRecord) -> MultiLeadRecord:
    eight = vcg.to_array() @ np.linalg.pinv(INVERSE_DOWER.rows).T
    leads = dict(zip(EIGHT_LEADS, eight.T))
    i, ii = leads["I"], leads["II"]
    leads.update(III=ii - i, aVR=-(i + ii) / 2, aVL=i - ii / 2, aVF=ii - i / 2)
    data = np.column_stack([leads[n] for n in TWELVE_LEADS])
    return MultiLeadRecord.from_array(data, TWELVE_LEADS, vcg.sample_rate_hz, "sample_12lead")


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    for kind in NOISE_KINDS:
        ts = standin_noise(kind, 500.0, 10.0, seed=SEED)
        rec = MultiLeadRecord([ts], 500.0, f"standin_{kind.lower()}")
        write_record(rec, DATA / f"noise_{kind.lower()}.csv", units="au", precision=8, kind=kind)
    vcg = synth_vcg(sample_rate_hz=500.0, duration_s=4.0)
    write_record(twelve_from_vcg(vcg), DATA / "sample_12lead.csv", precision=8)


if __name__ == "__main__":
    main()
