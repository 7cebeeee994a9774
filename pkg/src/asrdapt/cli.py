"""Command-line interface: profile, augment, wer, lr-init, lr-next,
schedule-sim.

Exit codes: 0 success, 1 operational error (bad input data), 2 usage
error (bad flags or config). Machine-readable results go to files or
stdout as JSON/CSV; progress and errors go to stderr. The default
worker count for profile/augment is the available parallelism,
overridable with the ASRDAPT_JOBS environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import augment as aug
from . import lrcontrol as lrc
from .errors import EmptyCorpus, ToolkitError
from .profiler import CorpusManifest, profile_corpus, read_profile, write_profile
from .wer import compute_wer

JOBS_ENV_VAR = "ASRDAPT_JOBS"


class UsageError(Exception):
    """Bad flag combination; maps to exit code 2."""


def _default_jobs() -> int:
    env = os.environ.get(JOBS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{JOBS_ENV_VAR} must be an integer, got {env!r}")
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------


def cmd_profile(args) -> int:
    manifest = CorpusManifest.load(args.input)
    jobs = args.jobs if args.jobs else _default_jobs()
    run = profile_corpus(manifest, sample_limit=args.sample_limit, seed=args.seed, jobs=jobs)
    write_profile(run.profile, args.out)

    p = run.profile
    print(f"profiled {run.analyzed} file(s), skipped {len(run.skipped)} -> {args.out}")
    print(f"{'metric':<24}{'mean':>12}{'std':>12}{'min':>12}{'max':>12}")
    for name, block in [("snr_db", p.snr_db), ("lufs", p.lufs),
                        ("spectral_centroid_hz", p.spectral_centroid_hz),
                        ("spectral_rolloff_hz", p.spectral_rolloff_hz)]:
        print(f"{name:<24}{block.mean:>12.3f}{block.std:>12.3f}{block.min:>12.3f}{block.max:>12.3f}")
    for path, reason in run.skipped:
        print(f"skipped {path}: {reason}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# augment
# ---------------------------------------------------------------------------


def cmd_augment(args) -> int:
    manifest = CorpusManifest.load(args.input)
    bank = aug.AssetBank.from_dirs(rir_dir=args.rir_dir, noise_dir=args.noise_dir)
    if args.preset:
        if args.preset != "telephony":
            raise UsageError(f"unknown preset {args.preset!r}")
        plan = aug.sample_preset_plan(aug.telephony_preset(args.bit_depth), manifest, args.seed)
    else:
        if not args.profile:
            raise UsageError("either --profile or --preset is required")
        profile = read_profile(args.profile)
        plan = aug.sample_plan(profile, manifest, bank, args.seed)

    jobs = args.jobs if args.jobs else _default_jobs()
    summary = aug.augment_corpus(plan, bank, args.out_dir, jobs=jobs)
    for path, reason in summary.failures:
        print(f"failed {path}: {reason}", file=sys.stderr)
    print(f"augmented {summary.processed} file(s), {summary.failed} failed "
          f"-> {args.out_dir} (report: {summary.report_path})")
    return 0 if summary.processed > 0 else 1


# ---------------------------------------------------------------------------
# wer
# ---------------------------------------------------------------------------


def _read_pairs(args) -> tuple[list[str], list[str]]:
    if args.jsonl:
        refs, hyps = [], []
        for line in Path(args.jsonl).read_text().splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            refs.append(str(obj["ref"]))
            hyps.append(str(obj["hyp"]))
        return refs, hyps
    if not (args.ref and args.hyp):
        raise UsageError("provide REF and HYP files, or --jsonl")
    refs = Path(args.ref).read_text().splitlines()
    hyps = Path(args.hyp).read_text().splitlines()
    return refs, hyps


def cmd_wer(args) -> int:
    refs, hyps = _read_pairs(args)
    report = compute_wer(refs, hyps, mode=args.mode, normalize=args.normalize)
    print(json.dumps(report.to_dict(), indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# lr-init / lr-next
# ---------------------------------------------------------------------------

_FAMILY_ALIASES = {"enc-dec": "encoder_decoder", "encoder_decoder": "encoder_decoder",
                   "llm": "llm"}


def _bounds_from_args(args, family: str) -> lrc.LrBounds:
    defaults = lrc.default_bounds(family)
    return lrc.LrBounds(
        eta_min=args.eta_min if args.eta_min is not None else defaults.eta_min,
        eta_max=args.eta_max if args.eta_max is not None else defaults.eta_max,
        family=family,
    )


def cmd_lr_init(args) -> int:
    family = _FAMILY_ALIASES[args.family]
    bounds = _bounds_from_args(args, family)
    if family == "llm":
        if args.wer0 is None:
            raise UsageError("--wer0 is required for the llm family")
        eta = lrc.initial_lr_llm(args.wer0, bounds)
    else:
        eta = lrc.initial_lr_encdec(bounds)
    print(json.dumps({"family": family, "eta": eta,
                      "eta_min": bounds.eta_min, "eta_max": bounds.eta_max}))
    return 0


def cmd_lr_next(args) -> int:
    if args.wers_file:
        text = Path(args.wers_file).read_text()
        wers = [float(w) for w in text.replace(",", " ").split()]
    else:
        wers = [float(w) for w in args.wers.replace(",", " ").split()] if args.wers else []
    if len(wers) < 2:
        raise UsageError(f"need at least 2 WER values, got {len(wers)}")
    bounds = _bounds_from_args(args, "encoder_decoder")
    config = lrc.SchedulerConfig(bounds=bounds, sigma_ref=args.sigma_ref)
    record = lrc.CycleRecord(cycle_index=0, eta=0.0, wer_evals=wers)
    print(json.dumps({"sigma_wer": record.sigma_wer,
                      "eta_next": lrc.next_cycle_lr(record, config),
                      "sigma_ref": config.sigma_ref,
                      "eta_min": bounds.eta_min, "eta_max": bounds.eta_max}))
    return 0


# ---------------------------------------------------------------------------
# schedule-sim
# ---------------------------------------------------------------------------


def cmd_schedule_sim(args) -> int:
    config_path = Path(args.config)
    if not config_path.is_file():
        raise UsageError(f"config file not found: {config_path}")
    try:
        with open(config_path, "rb") as f:
            doc = tomllib.load(f)
        sched = doc["scheduler"]
        trainer_cfg = doc["trainer"]
        output = doc.get("output", {})

        family = _FAMILY_ALIASES[sched.get("family", "encoder_decoder")]
        defaults = lrc.default_bounds(family)
        bounds = lrc.LrBounds(
            eta_min=float(sched.get("eta_min", defaults.eta_min)),
            eta_max=float(sched.get("eta_max", defaults.eta_max)),
            family=family,
        )
        config = lrc.SchedulerConfig(
            bounds=bounds,
            sigma_ref=float(sched.get("sigma_ref", lrc.DEFAULT_SIGMA_REF)),
            steps_per_cycle=int(sched.get("steps_per_cycle", 500)),
            eval_every=int(sched.get("eval_every", 50)),
            patience=int(sched.get("patience", 5)),
            min_delta=float(sched.get("min_delta", 0.1)),
        )
        max_cycles = int(sched.get("max_cycles", 50))
        trainer = lrc.SyntheticTrainer(**trainer_cfg)
    except (tomllib.TOMLDecodeError, ToolkitError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad config {config_path}: {exc}") from exc

    result = lrc.run_adaptation(trainer, config, family=family, max_cycles=max_cycles)
    csv_path = Path(output.get("trajectory_csv", "trajectory.csv"))
    json_path = Path(output.get("summary_json", "summary.json"))
    lrc.write_trajectory_csv(result.points, csv_path)
    json_path.write_text(json.dumps(result.summary(), indent=2) + "\n")
    summary = result.summary()
    print(f"best step {summary['best_step']} wer {summary['best_wer']:.4f} "
          f"(stopped: {summary['stopped_reason']}; trajectory: {csv_path})")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asrdapt",
        description="Corpus profiling, profile-driven augmentation, WER scoring "
                    "and learning-rate control for ASR domain adaptation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="analyze a corpus into an acoustic profile")
    p.add_argument("input", help="manifest JSONL or directory of WAV files")
    p.add_argument("--out", required=True, help="output profile JSON path")
    p.add_argument("--sample-limit", "--sample", type=int, default=None,
                   help="analyze a seeded uniform subset of this size")
    p.add_argument("--jobs", type=int, default=0, help="worker processes (0 = auto)")
    p.add_argument("--seed", type=int, default=0, help="seed for subset sampling")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("augment", help="render profile-driven augmented copies")
    p.add_argument("input", help="manifest JSONL or directory of WAV files")
    p.add_argument("--out-dir", required=True, help="output root for WAVs and report")
    p.add_argument("--profile", help="driving profile JSON (omit with --preset)")
    p.add_argument("--preset", choices=["telephony"], help="fixed channel recipe")
    p.add_argument("--noise-dir", help="directory of noise-bed WAVs")
    p.add_argument("--rir-dir", help="directory of room impulse response WAVs")
    p.add_argument("--seed", type=int, default=0, help="master seed for the plan")
    p.add_argument("--jobs", type=int, default=0, help="worker processes (0 = auto)")
    p.add_argument("--bit-depth", type=int, default=16, choices=[8, 16],
                   help="preset output bit depth")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("wer", help="score hypothesis transcripts against references")
    p.add_argument("ref", nargs="?", help="reference text file, one utterance per line")
    p.add_argument("hyp", nargs="?", help="hypothesis text file, parallel to ref")
    p.add_argument("--jsonl", help='JSONL with {"ref": ..., "hyp": ...} per line')
    p.add_argument("--mode", choices=["word", "char"], default="word")
    p.add_argument("--normalize", action="store_true",
                   help="lowercase and strip punctuation before tokenizing")
    p.add_argument("--out", help="also write the JSON report to this path")
    p.set_defaults(func=cmd_wer)

    p = sub.add_parser("lr-init", help="initial learning rate for a model family")
    p.add_argument("--family", choices=["enc-dec", "llm"], required=True)
    p.add_argument("--wer0", type=float, help="baseline WER percent (llm family)")
    p.add_argument("--eta-min", type=float, default=None)
    p.add_argument("--eta-max", type=float, default=None)
    p.set_defaults(func=cmd_lr_init)

    p = sub.add_parser("lr-next", help="next-cycle rate from in-cycle WERs")
    p.add_argument("--wers", help="comma- or space-separated WER values")
    p.add_argument("--wers-file", help="file with WER values")
    p.add_argument("--sigma-ref", type=float, default=lrc.DEFAULT_SIGMA_REF)
    p.add_argument("--eta-min", type=float, default=None)
    p.add_argument("--eta-max", type=float, default=None)
    p.set_defaults(func=cmd_lr_next)

    p = sub.add_parser("schedule-sim", help="run the control loop on the synthetic trainer")
    p.add_argument("config", help="TOML config with [scheduler], [trainer], [output]")
    p.set_defaults(func=cmd_schedule_sim)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except EmptyCorpus as exc:
        print(f"error: no analyzable files ({exc})", file=sys.stderr)
        return 1
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
