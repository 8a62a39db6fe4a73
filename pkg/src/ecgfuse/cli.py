"""``ecgfuse`` command line.

Exit codes: 0 success, 1 usage error, 2 data error (bad file, constant lead,
series too short, ...). ``--config`` falls back to ``$ECGFUSE_FIS_CONFIG``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import embedding, lwlpa, nfda, recordio, synthgen, vcgprep
from .errors import DataError, UnacceptableRecord
from .fis import load_fis_config

log = logging.getLogger("ecgfuse")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _pick_lead(record, lead):
    return record[lead] if lead else record[record.names[0]]


def _params_for(record, args) -> tuple[dict, embedding.EmbeddingParams]:
    per_lead = {}
    for name in record.names:
        ts = record[name]
        if args.m and args.tau:
            per_lead[name] = embedding.EmbeddingParams(args.m, args.tau)
        else:
            est = embedding.estimate_params(ts, max_tau=args.max_tau, max_m=args.max_m)
            per_lead[name] = embedding.EmbeddingParams(args.m or est.m, args.tau or est.tau)
    return per_lead, embedding.select_joint_params(per_lead.values())


def _to_vcg(record, args):
    flagged = vcgprep.detect_constant_leads(record, args.epsilon)
    if flagged:
        raise UnacceptableRecord(flagged)
    if all(n in record for n in vcgprep.EIGHT_LEADS):
        matrix = vcgprep.load_dower_matrix(args.matrix) if args.matrix else vcgprep.INVERSE_DOWER
        log.info("12-lead input: converting to VCG")
        return vcgprep.inverse_dower(vcgprep.select_eight_leads(record), matrix)
    return record


def cmd_embed(args):
    record = recordio.read_record(args.input)
    if args.lead:
        record = vcgprep.MultiLeadRecord([record[args.lead]])
    per_lead, joint = _params_for(record, args)
    if args.out:
        ts = _pick_lead(record, args.lead)
        recordio.write_trajectory(embedding.delay_embed(ts, joint), args.out)
    _emit(
        {
            "per_lead": {n: {"m": p.m, "tau": p.tau} for n, p in per_lead.items()},
            "joint": {"m": joint.m, "tau": joint.tau},
        }
    )


def cmd_lwlpa(args):
    record = recordio.read_record(args.input)
    ts = _pick_lead(record, args.lead)
    params = embedding.EmbeddingParams(args.m, args.tau)
    traj = embedding.delay_embed(ts, params)
    n = args.neighbors or lwlpa.default_neighbors(args.m)
    pred, actual = lwlpa.forecast_one_step(traj, args.horizon, n, args.lam)
    persist = lwlpa.persistence_forecast(traj, args.horizon)
    start = len(traj) - args.horizon
    with open(args.out, "w") as fh:
        fh.write("state,predicted,actual\n")
        for i in range(args.horizon):
            fh.write(f"{start + i},{pred[i, 0]!r},{actual[i, 0]!r}\n")
    _emit(
        {
            "lead": ts.label,
            "m": args.m,
            "tau": args.tau,
            "neighbors": n,
            "horizon": args.horizon,
            "rmse": float(np.sqrt(np.mean((pred - actual) ** 2))),
            "persistence_rmse": float(np.sqrt(np.mean((persist - actual) ** 2))),
        }
    )


def cmd_dower(args):
    record = recordio.read_record(args.input)
    flagged = vcgprep.detect_constant_leads(record, args.epsilon)
    if flagged:
        raise UnacceptableRecord(flagged)
    matrix = vcgprep.load_dower_matrix(args.matrix) if args.matrix else vcgprep.INVERSE_DOWER
    vcg = vcgprep.inverse_dower(vcgprep.select_eight_leads(record), matrix)
    recordio.write_record(vcg, args.out)


def cmd_synth(args):
    params = synthgen.EcgModelParams(heart_rate_bpm=args.hr)
    vcg = synthgen.synth_vcg(params, args.fs, args.duration)
    recordio.write_record(vcg, args.out)


def cmd_noise(args):
    record = recordio.read_record(args.input)
    fs = record.sample_rate_hz
    if args.noise_file:
        noise = synthgen.load_noise_record(args.noise_file, args.kind, sample_rate_hz=fs)
    else:
        noise = synthgen.bundled_noise(args.kind, sample_rate_hz=fs)
    noisy = synthgen.add_noise_at_snr(record[args.lead], noise, args.snr, args.offset)
    recordio.write_record(record.replace(args.lead, noisy), args.out)
    clean = record[args.lead].samples
    _emit({"lead": args.lead, "kind": args.kind, "target_snr_db": args.snr,
           "measured_snr_db": synthgen.measure_snr(clean, noisy.samples - clean)})


def _fuse_record(record, args, config):
    vcg = _to_vcg(record, args)
    per_lead, joint = _params_for(vcg, args)
    trajs = [embedding.delay_embed(vcg[n], joint) for n in vcg.names]
    result = nfda.fuse_detailed(trajs, config)
    fused = result.trajectory
    metrics = {
        "record": record.record_id,
        "leads": vcg.names,
        "per_lead_params": {n: {"m": p.m, "tau": p.tau} for n, p in per_lead.items()},
        "joint": {"m": joint.m, "tau": joint.tau},
        "n_states": len(fused),
        "disorder_metric": nfda.disorder_metric(fused),
        "lead_disorder_metric": {t.source_label: nfda.disorder_metric(t) for t in trajs},
        "mean_weight": dict(zip(vcg.names, result.weights.mean(axis=0).tolist())),
        "degenerate_steps": int(result.degenerate.sum()),
        "gamma": config.gamma,
    }
    return fused, metrics


def _suffixed(path, i):
    p = Path(path)
    return p.with_name(f"{p.stem}_seg{i:03d}{p.suffix}")


def cmd_fuse(args):
    record = recordio.read_record(args.input)
    fis_d, fis_alpha = load_fis_config(args.config or os.environ.get("ECGFUSE_FIS_CONFIG"))
    config = nfda.FusionConfig(gamma=args.gamma, normalization=args.normalization, fis_d=fis_d, fis_alpha=fis_alpha)
    if args.window_s:
        segments = recordio.segment_record(record, args.window_s, args.hop_s)
        parts = [(s.extract(record), _suffixed(args.out, i)) for i, s in enumerate(segments)]
    else:
        parts = [(record, Path(args.out))]
    report = []
    for rec, out in parts:
        fused, metrics = _fuse_record(rec, args, config)
        recordio.write_trajectory(fused, out)
        if args.series_out:
            series_path = args.series_out if len(parts) == 1 else _suffixed(args.series_out, len(report))
            ts = lwlpa.extract_series(fused)
            series = embedding.TimeSeries(ts.samples, ts.sample_rate_hz, "fused")
            recordio.write_record(vcgprep.MultiLeadRecord([series]), series_path)
        metrics["output"] = str(out)
        if not np.isfinite(metrics["disorder_metric"]):
            raise DataError("fused metrics are not finite")
        report.append(metrics)
    _emit(report[0] if len(report) == 1 else {"segments": report}, args.metrics)


def cmd_metrics(args):
    if _is_trajectory(args.input):
        traj = recordio.read_trajectory(args.input)
        _emit({"label": traj.source_label, "n_states": len(traj), "disorder_metric": nfda.disorder_metric(traj)})
        return
    record = recordio.read_record(args.input)
    _, joint = _params_for(record, args)
    out = {n: nfda.disorder_metric(embedding.delay_embed(record[n], joint)) for n in record.names}
    _emit({"joint": {"m": joint.m, "tau": joint.tau}, "disorder_metric": out})


def _is_trajectory(path) -> bool:
    with open(path) as fh:
        for line in fh:
            if line.strip():
                return line.strip().startswith("# trajectory")
    return False


def _embedding_args(p, required=False):
    p.add_argument("--m", type=int, required=required, help="embedding dimension (estimated by FNN if omitted)")
    p.add_argument("--tau", type=int, required=required, help="delay in samples (estimated by AD if omitted)")
    if not required:
        p.add_argument("--max-m", type=int, default=10)
        p.add_argument("--max-tau", type=int, default=50)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecgfuse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", help="estimate embedding parameters (FNN + AD)")
    p.add_argument("--input", required=True)
    p.add_argument("--lead")
    _embedding_args(p)
    p.add_argument("--out", help="write the delay trajectory of --lead (or the first lead)")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("lwlpa-predict", help="one-step local weighted linear prediction")
    p.add_argument("--input", required=True)
    p.add_argument("--lead")
    _embedding_args(p, required=True)
    p.add_argument("--neighbors", type=int, help="neighbour count (default 2(m+1))")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--horizon", type=int, default=100, help="number of held-out final transitions")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lwlpa)

    p = sub.add_parser("dower", help="12-lead ECG to VCG")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--matrix", help="JSON with a custom 3x8 matrix")
    p.add_argument("--epsilon", type=float, default=1e-6, help="constant-lead range threshold")
    p.set_defaults(func=cmd_dower)

    p = sub.add_parser("synth", help="synthetic 3-lead VCG")
    p.add_argument("--hr", type=float, default=60.0)
    p.add_argument("--fs", type=float, default=500.0)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("noise", help="corrupt one lead at a target SNR")
    p.add_argument("--input", required=True)
    p.add_argument("--lead", default="Vx")
    p.add_argument("--kind", choices=synthgen.NOISE_KINDS, required=True)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--noise-file", help="csv_v1 noise record (bundled stand-in if omitted)")
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("fuse", help="fuse a multi-lead record into one trajectory")
    p.add_argument("--input", required=True)
    p.add_argument("--config", help="FIS override JSON (default $ECGFUSE_FIS_CONFIG)")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--normalization", choices=nfda.NORMALIZATIONS, default="global_max")
    _embedding_args(p)
    p.add_argument("--matrix", help="custom inverse-Dower matrix JSON")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--window-s", type=float, help="fuse fixed windows of this length separately")
    p.add_argument("--hop-s", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--series-out", help="also write the fused scalar series")
    p.add_argument("--metrics", help="write metrics JSON here instead of stdout")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("metrics", help="disorder metric of a trajectory or record")
    p.add_argument("--input", required=True)
    _embedding_args(p)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (DataError, OSError) as exc:
        print(f"ecgfuse {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # out-of-range option values (gamma <= 0, window <= 0, ...)
        print(f"ecgfuse {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
