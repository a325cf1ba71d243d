"""Command-line entry point: ``edgelab <subcommand> [options]``.

Exit codes: 0 when the command succeeds (and any verdict passes), 2 when a
verdict fails, 1 on errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .chain import PinSet, load_chain, validate_chain
from .errors import LabError
from .expansion import classical_expansion, full_expansion, sup_error
from .oracle import invert_dft, sum_pmf
from .resonance import prokhorov_classify, residue_profile
from .rpf import rpf_triplets, verify_rpf
from .lab.experiments import EXPERIMENTS, ExperimentReport, run_experiment
from .lab.report import FORMATS, emit_report, report_json
from .lab.scenarios import PRESETS, Scenario, preset

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _ladder(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"ladder must be comma-separated integers, got {text!r}")


def _pins(text):
    """``"3:0,7:1"`` -> ``{3: 0, 7: 1}``."""
    if not text:
        return None
    try:
        return PinSet({int(a): int(b) for a, b in (p.split(":") for p in text.split(","))})
    except ValueError:
        raise argparse.ArgumentTypeError(f"pins must look like 'step:state,...', got {text!r}")


def _emit(text, out_dir, name):
    if out_dir is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text if text.endswith("\n") else text + "\n")
    print(path)


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2)


def cmd_validate(args):
    report = validate_chain(load_chain(args.spec))
    _emit(_dumps(report.to_dict()), args.out_dir, "validate.json")
    return EXIT_PASS


def cmd_oracle(args):
    spec = load_chain(args.spec)
    pmf = (invert_dft if args.method == "dft" else sum_pmf)(spec, args.pins)
    if args.format == "json":
        text = _dumps({"offset": int(pmf.offset), "probs": pmf.probs.tolist(),
                       "mean": pmf.mean, "sigma": pmf.sigma})
    else:
        text = pmf.to_csv()
    _emit(text, args.out_dir, f"pmf.{args.format}")
    return EXIT_PASS


def cmd_expand(args):
    spec = load_chain(args.spec)
    exp = (full_expansion(spec, args.order, R=args.R) if args.full
           else classical_expansion(spec, args.order))
    out = exp.to_dict()
    pmf = sum_pmf(spec)
    out["sup_error"] = sup_error(pmf, exp)
    out["scaled_sup_error"] = pmf.sigma ** args.order * out["sup_error"]
    _emit(_dumps(out), args.out_dir, "expansion.json")
    return EXIT_PASS


def cmd_resonance(args):
    spec = load_chain(args.spec)
    if args.m is not None:
        _emit(residue_profile(spec, args.m).to_csv(), args.out_dir, f"residues_m{args.m}.csv")
        return EXIT_PASS
    rep = prokhorov_classify(spec, args.R, args.statistic)
    _emit(_dumps(json.loads(rep.to_json())), args.out_dir, "prokhorov.json")
    return EXIT_PASS


def cmd_rpf(args):
    spec = load_chain(args.spec)
    seq = rpf_triplets(spec, complex(args.z), check=False)
    chk = verify_rpf(spec, seq, seed=args.seed)
    if args.format == "csv":
        _emit(chk.to_csv(), args.out_dir, "rpf_residuals.csv")
    else:
        _emit(_dumps({"z": [seq.z.real, seq.z.imag], "seed_discrepancy": seq.seed_discrepancy,
                      "max_primal": chk.max_primal, "max_dual": chk.max_dual,
                      "decay_ratio": chk.decay_ratio, "window": list(chk.window),
                      "lambda_abs_range": [float(np.abs(seq.lams).min()),
                                           float(np.abs(seq.lams).max())]}),
              args.out_dir, "rpf.json")
    ok = (max(seq.seed_discrepancy, chk.max_primal, chk.max_dual) < 1e-10
          and chk.decay_ratio is not None and chk.decay_ratio < 0.95)
    return EXIT_PASS if ok else EXIT_FAIL


def _scenario_from(args, config):
    if "scenario" in config and isinstance(config["scenario"], dict):
        sc = Scenario.from_dict(config["scenario"])
    else:
        sc = preset(args.scenario or config.get("scenario", "random-elliptic"))
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.ladder is not None:
        changes["ladder"] = args.ladder
    return sc.with_(**changes) if changes else sc


def cmd_experiment(args):
    config = {}
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
    sc = _scenario_from(args, config)
    params = dict(config.get("params", {}))
    if args.order is not None:
        params["r"] = args.order
    if args.R is not None:
        params["R"] = args.R
    rep = run_experiment(args.id, sc, params)
    for v in rep.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'} {v.name}: {v.metric} [{v.threshold}; "
              f"{v.anchor}] {v.detail}".rstrip())
    for f in rep.flags:
        print(f"flag: {f}")
    if args.out_dir is not None:
        for path in emit_report(rep, args.format or FORMATS, args.out_dir):
            print(path)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_report(args):
    with open(args.input) as fh:
        rep = ExperimentReport.from_dict(json.load(fh))
    formats = args.format or FORMATS
    if args.out_dir is None:
        for fmt in formats:
            if fmt == "json":
                sys.stdout.write(report_json(rep))
            else:
                from .lab.report import RENDERERS

                sys.stdout.write(RENDERERS[fmt](rep))
    else:
        for path in emit_report(rep, formats, args.out_dir):
            print(path)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edgelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("--spec", required=True, help="chain spec JSON file")
        sp.add_argument("--out-dir", default=None, help="write files here instead of stdout")
        return sp

    common(sub.add_parser("validate", help="ellipticity constant and mixing fit"))

    sp = common(sub.add_parser("oracle", help="exact law of the sum"))
    sp.add_argument("--pins", type=_pins, default=None, help="conditioning, e.g. '3:0,7:1'")
    sp.add_argument("--method", choices=("dp", "dft"), default="dp")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = common(sub.add_parser("expand", help="Edgeworth expansion and its sup error"))
    sp.add_argument("--order", type=int, default=1)
    sp.add_argument("--full", action="store_true", help="include resonant terms")
    sp.add_argument("--R", type=float, default=10.0, help="drop-rule constant")

    sp = common(sub.add_parser("resonance", help="residue statistics and drop verdicts"))
    sp.add_argument("--R", type=float, default=10.0)
    sp.add_argument("--statistic", choices=("second", "nonmodal"), default="second")
    sp.add_argument("--m", type=int, default=None, help="emit the per-step profile for m")

    sp = common(sub.add_parser("rpf", help="sequential eigen-triplets and their checks"))
    sp.add_argument("--z", type=complex, default=0j)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=("csv", "json"), default="json")

    sp = common(sub.add_parser("experiment", help="run a ladder experiment"), spec=False)
    sp.add_argument("id", choices=sorted(EXPERIMENTS))
    sp.add_argument("--scenario", choices=sorted(PRESETS), default=None)
    sp.add_argument("--ladder", type=_ladder, default=None, help="e.g. 64,256,1024")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--order", type=int, default=None)
    sp.add_argument("--R", type=float, default=None)
    sp.add_argument("--config", default=None, help="JSON with 'scenario' and 'params'")
    sp.add_argument("--format", action="append", choices=FORMATS, default=None)

    sp = common(sub.add_parser("report", help="re-render a saved JSON report"), spec=False)
    sp.add_argument("input", help="report JSON written by 'experiment'")
    sp.add_argument("--format", action="append", choices=FORMATS, default=None)
    return p


COMMANDS = {"validate": cmd_validate, "oracle": cmd_oracle, "expand": cmd_expand,
            "resonance": cmd_resonance, "rpf": cmd_rpf, "experiment": cmd_experiment,
            "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (LabError, OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
