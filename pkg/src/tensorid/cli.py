"""Command-line front end.

    tensorid --experiment 1 --alg itlms --alg tlms --seed 7 --out exp1.csv
    tensorid --experiment 1 --complexity-report
    tensorid --complexity-report --out costs.csv

Runs the selected benchmark scenario for the requested algorithms, writes
the per-sample NMSE curves as CSV, and renders a PNG figure (smoothed for
display only) next to it.  `--complexity-report` prints the closed-form
per-sample operation totals instead of simulating.

Configuration files are flat `key = value` text with dotted section keys;
see the README for the schema.  The seed falls back to the TENSORID_SEED
environment variable, then to 1234.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import experiments, reporting
from .experiments import ALGORITHMS, ExperimentSpec, experiment_spec
from .systems import InputProcess, UnknownSystem

DEFAULT_SEED = 1234


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() == "none":
        return None
    return text


def load_config(path) -> dict:
    """Flat key-value config: one `dotted.key = value` per line, # comments."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            cfg[key.strip()] = _parse_value(value)
    return cfg


def apply_config(spec: ExperimentSpec, cfg: dict) -> tuple[ExperimentSpec, dict]:
    """Apply overrides; returns (spec, leftover run.* settings)."""
    run_opts = {}
    system_kw = {}
    for key, value in cfg.items():
        parts = key.split(".")
        if parts[0] == "run":
            run_opts[parts[1]] = value
        elif parts[0] == "system":
            system_kw[parts[1]] = value
        elif parts[0] == "alg":
            if len(parts) != 3:
                raise ValueError(f"bad algorithm key {key!r} (alg.<name>.<field>)")
            _, name, fld = parts
            if name not in spec.alg_params:
                raise ValueError(f"no parameter block for algorithm {name!r}")
            block = spec.alg_params[name]
            if not hasattr(block, fld):
                raise ValueError(f"{type(block).__name__} has no field {fld!r}")
            spec.alg_params[name] = replace(block, **{fld: value})
        else:
            raise ValueError(f"unknown config section {parts[0]!r} in {key!r}")
    if system_kw:
        sys_fields = {
            "fir_taps": spec.system.fir_taps,
            "fir_taps_after_switch": spec.system.fir_taps_after_switch,
            "switch_at": spec.system.switch_at,
        }
        process = spec.process
        for fld, value in system_kw.items():
            if fld == "ar_coefficient":
                process = InputProcess(process.kind, float(value))
            elif fld in sys_fields:
                if fld.endswith("taps") or fld.endswith("switch"):
                    value = tuple(value) if value is not None and not isinstance(value, (int, float)) else value
                sys_fields[fld] = value
            else:
                raise ValueError(f"unknown system override {fld!r}")
        if isinstance(sys_fields["fir_taps"], (int, float)):
            sys_fields["fir_taps"] = (float(sys_fields["fir_taps"]),)
        system = UnknownSystem(spec.system.structure, spec.system.nonlinearity,
                               **sys_fields)
        spec = replace(spec, system=system, process=process)
    for fld in ("n_samples", "n_runs", "snr_db"):
        if fld in run_opts:
            spec = replace(spec, **{fld: run_opts.pop(fld)})
    return spec, run_opts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tensorid",
        description="Adaptive nonlinear system identification benchmarks "
                    "with interpolated low-rank tensor learners.",
    )
    parser.add_argument("--experiment", type=int, choices=range(1, 7),
                        metavar="{1..6}", help="benchmark scenario")
    parser.add_argument("--alg", action="append", choices=ALGORITHMS,
                        help="algorithm to run (repeatable; default: the "
                             "scenario's four benchmark learners)")
    parser.add_argument("--runs", type=int, help="Monte-Carlo runs (default 20)")
    parser.add_argument("--samples", type=int, help="samples per run (default 20000)")
    parser.add_argument("--seed", type=int,
                        help="base seed (fallback: TENSORID_SEED, then 1234)")
    parser.add_argument("--config", help="key-value config file with overrides")
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--jobs", type=int, default=0,
                        help="parallel Monte-Carlo workers (0 = auto)")
    parser.add_argument("--complexity-report", action="store_true",
                        help="print the closed-form operation-count table "
                             "and exit (CSV to --out when given)")
    return parser


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("TENSORID_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValueError(f"TENSORID_SEED must be an integer, got {env!r}") from exc
    return DEFAULT_SEED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        seed = _resolve_seed(args)
        cfg = load_config(args.config) if args.config else {}

        if args.complexity_report:
            ids = [args.experiment] if args.experiment else list(range(1, 7))
            specs = [experiment_spec(i) for i in ids]
            sys.stdout.write(reporting.complexity_table(specs))
            if args.out:
                reporting.write_complexity_csv(args.out, specs)
                print(f"wrote {args.out}")
            return 0

        if args.experiment is None:
            parser.error("--experiment is required (or use --complexity-report)")

        spec = experiment_spec(args.experiment)
        spec, run_opts = apply_config(spec, cfg)
        if args.samples:
            spec = replace(spec, n_samples=args.samples)
        if args.runs:
            spec = replace(spec, n_runs=args.runs)
        if spec.switch_at is not None and spec.switch_at >= spec.n_samples:
            # keep the mid-run swap mid-run when n_samples shrinks
            system = replace(spec.system, switch_at=spec.n_samples // 2)
            spec = replace(spec, system=system)

        algs = args.alg or experiments.default_algorithms(spec)
        for alg in algs:
            if not spec.compatible(alg):
                needs = experiments.ALG_STRUCTURE[alg]
                parser.error(
                    f"algorithm {alg!r} identifies {needs} systems, but "
                    f"experiment {spec.id} is {spec.structure}: cascades pair "
                    f"with their block order (tlms/itlms: Hammerstein "
                    f"experiments 1/4/5; lmst/ilmst: Wiener experiments "
                    f"2/3/6); tensor-only and lms run on either"
                )

        jobs = args.jobs or int(run_opts.get("jobs", 0))
        if jobs <= 0:
            jobs = max(1, min(os.cpu_count() or 1, spec.n_runs))
        smoothing = int(run_opts.get("smoothing_window", reporting.DEFAULT_SMOOTHING))

        results = experiments.run_experiment(spec, algs, seed, jobs=jobs)

        out = args.out or f"experiment{spec.id}_nmse.csv"
        reporting.write_csv(out, {a: results[a].db for a in algs})
        fig = reporting.figure_path_for(out)
        reporting.render_nmse_figure(
            fig, {a: results[a].db for a in algs},
            title=f"experiment {spec.id} ({spec.structure}, "
                  f"{spec.n_runs} runs, seed {seed})",
            smoothing=smoothing,
        )
        print(f"wrote {out} and {fig}")
        for alg in algs:
            series = results[alg]
            ss = experiments.steady_state_db(series, spec)
            note = f", {series.excluded} guarded samples" if series.excluded else ""
            print(f"  {alg:8s} steady-state NMSE {ss:8.2f} dB{note}")
        return 0
    except (ValueError, OSError) as exc:
        print(f"tensorid: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ValueError) else 1


if __name__ == "__main__":
    sys.exit(main())
