import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

# Add parent directory to path to allow running script directly
# This allows the script to be run as: python intonation_vc/cli.py
# or as: python -m intonation_vc.cli
_script_dir = Path(__file__).resolve().parent
_project_root = _script_dir.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

import numpy as np
import yaml
from dotenv import load_dotenv

from intonation_vc.config import RunConfig, get_config, get_config_manager, reload_config
from intonation_vc.errors import IntonationVCError
from intonation_vc.logging_utils import configure_logging

# Options whose values are never treated as paths when a run is recorded.
_VALUE_OPTIONS = {"--set", "--log-level"}
_GLOBAL_OPTIONS = {"--config", "--out", "--set"}


@dataclass
class RunContext:
    """State shared by one CLI invocation: configuration, output directory and written artifacts."""

    command: str
    argv: List[str]
    config: RunConfig
    out_dir: Path
    artifacts: List[Path] = field(default_factory=list)
    defaulted_inputs: Dict[str, str] = field(default_factory=dict)

    def input_path(self, option: str, value: Optional[str], default: Path) -> Path:
        """Explicit path, or a default inside the output directory that is recorded for replay."""
        if value is not None:
            return Path(value)
        self.defaulted_inputs[option] = str(default.resolve())
        return default

    def add(self, *paths: Path) -> None:
        self.artifacts.extend(Path(p) for p in paths)


def recorded_argv(argv: Sequence[str], defaulted: Dict[str, str]) -> List[str]:
    """``argv`` with existing paths made absolute and defaulted inputs spelled out."""
    recorded = []
    skip_next = False
    for token in argv:
        if skip_next:
            recorded.append(token)
            skip_next = False
            continue
        if token in _VALUE_OPTIONS:
            skip_next = True
            recorded.append(token)
            continue
        if not token.startswith("-") and Path(token).exists():
            token = str(Path(token).resolve())
        recorded.append(token)
    for option, path in defaulted.items():
        recorded.extend([option, path])
    return recorded


def strip_global_options(argv: Sequence[str]) -> List[str]:
    """Remove --config, --out and --set (with their values) from a recorded argv."""
    stripped = []
    tokens = iter(argv)
    for token in tokens:
        name = token.split("=", 1)[0]
        if name in _GLOBAL_OPTIONS:
            if "=" not in token:
                next(tokens, None)
            continue
        stripped.append(token)
    return stripped


def write_history(path: Path, rows: Sequence[Dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        if rows:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    return path


def write_summary(path: Path, summary: Dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(summary, f, default_flow_style=False, sort_keys=False)
    return path


def _relative_files(summary: Dict) -> Dict:
    """Replace artifact paths in a summary by bare file names so reruns elsewhere match byte for byte."""
    if "files" in summary:
        summary["files"] = [Path(p).name for p in summary["files"]]
    return summary


def _load_corpus(ctx: RunContext, value: Optional[str]):
    from intonation_vc.harness import load_corpus_dir

    cfg = ctx.config
    root = ctx.input_path("--corpus", value, ctx.out_dir / "corpus")
    return load_corpus_dir(root, cfg.signal, cfg.corpus.held_out_fraction, cfg.seed)


def _load_model(ctx: RunContext, option: str, value: Optional[str], default_name: str):
    from intonation_vc.harness import load_checkpoint

    return load_checkpoint(ctx.input_path(option, value, ctx.out_dir / default_name))


def default_synth_name(out_dir: Path) -> str:
    """synth.ckpt, unless only a baseline was trained into ``out_dir``."""
    if not (out_dir / "synth.ckpt").exists() and (out_dir / "baseline.ckpt").exists():
        return "baseline.ckpt"
    return "synth.ckpt"


def _engine(ctx: RunContext, args):
    from intonation_vc.pipeline import ConversionEngine

    classifier = _load_model(ctx, "--classifier", args.classifier, "classifier.ckpt")
    synthesizer = _load_model(ctx, "--synth", args.synth, default_synth_name(ctx.out_dir))
    return ConversionEngine(classifier, synthesizer, ctx.config)


def cmd_gen_corpus(ctx: RunContext, args) -> None:
    from intonation_vc.harness import generate_corpus, save_corpus
    from intonation_vc.phoneme import PhonemeInventory

    cfg = ctx.config
    inventory = PhonemeInventory.from_file(args.inventory) if args.inventory else PhonemeInventory.default()
    corpus = generate_corpus(cfg.seed, None, inventory, None, cfg.corpus, cfg.signal, cfg.workers)
    ctx.add(*save_corpus(corpus, ctx.out_dir / "corpus"))
    print(f"Generated {len(corpus)} utterances ({len(corpus.held_out)} held out) in {ctx.out_dir / 'corpus'}")


def cmd_train_classifier(ctx: RunContext, args) -> None:
    from intonation_vc.harness import save_checkpoint
    from intonation_vc.phoneme import train_classifier

    corpus = _load_corpus(ctx, args.corpus)
    model, history = train_classifier(corpus, ctx.config)
    ctx.add(save_checkpoint(model, ctx.out_dir / "classifier.ckpt", ctx.config, ctx.config.seed))
    ctx.add(write_history(ctx.out_dir / "classifier_history.csv", [m.to_dict() for m in history]))
    if history:
        last = history[-1]
        held_out = "n/a" if last.held_out_accuracy is None else f"{last.held_out_accuracy:.3f}"
        print(f"Trained classifier: train accuracy {last.train_accuracy:.3f}, held-out accuracy {held_out}")


def cmd_train_synth(ctx: RunContext, args) -> None:
    from intonation_vc.harness import save_checkpoint
    from intonation_vc.synth import train_synthesizer

    corpus = _load_corpus(ctx, args.corpus)
    classifier = _load_model(ctx, "--classifier", args.classifier, "classifier.ckpt")
    model, history = train_synthesizer(corpus, classifier, ctx.config)
    name = "baseline.ckpt" if ctx.config.synth.baseline else "synth.ckpt"
    ctx.add(save_checkpoint(model, ctx.out_dir / name, ctx.config, ctx.config.seed))
    ctx.add(write_history(ctx.out_dir / f"{Path(name).stem}_history.csv", [m.to_dict() for m in history]))
    print(f"Trained {model.kind} synthesizer ({len(history)} epochs) -> {ctx.out_dir / name}")


def cmd_convert(ctx: RunContext, args) -> None:
    from intonation_vc.harness import save_checkpoint
    from intonation_vc.pipeline import sample_epsilon
    from intonation_vc.signal import read_wav, write_pgm, write_wav

    engine = _engine(ctx, args)
    source = read_wav(args.input)
    eps = None if engine.is_baseline else sample_epsilon(ctx.config.sampler, engine.latent_dim)
    result = engine.convert(source, eps)
    stem = f"{Path(args.input).stem}_s{ctx.config.sampler.seed}"
    result.files.append(write_wav(ctx.out_dir / f"{stem}.wav", result.waveform))
    result.files.append(write_pgm(ctx.out_dir / f"{stem}.pgm", result.mel.mels))
    result.files.append(save_checkpoint(result.spectrogram, ctx.out_dir / f"{stem}.spec"))
    ctx.add(*result.files)
    ctx.add(write_summary(ctx.out_dir / f"{stem}.yaml", _relative_files(result.to_dict())))
    print(f"Converted {args.input} -> {ctx.out_dir / (stem + '.wav')}")


def cmd_interpolate(ctx: RunContext, args) -> None:
    from intonation_vc.pipeline import InterpolationSpec, load_noise
    from intonation_vc.signal import read_wav

    engine = _engine(ctx, args)
    if engine.is_baseline:
        raise IntonationVCError("Interpolation needs a CVAE synthesizer; the baseline has no latent")
    dim = engine.latent_dim
    spec = InterpolationSpec.uniform(load_noise(args.eps1, dim), load_noise(args.eps2, dim), args.steps)
    sweep = engine.interpolation_sweep(read_wav(args.input), spec, ctx.out_dir, Path(args.input).stem)
    ctx.add(*sweep.files)
    print(f"Wrote {len(sweep.results)} interpolation steps; endpoint mel distance {sweep.endpoint_distance:.4f}")


def cmd_diversity(ctx: RunContext, args) -> None:
    from intonation_vc.signal import read_wav

    engine = _engine(ctx, args)
    stem = Path(args.input).stem
    report = engine.diversity_report(read_wav(args.input), ctx.config.sampler, ctx.out_dir, stem)
    ctx.add(*report.files)
    ctx.add(write_summary(ctx.out_dir / f"{stem}_diversity.yaml", _relative_files(report.to_dict())))
    print(f"Mean pairwise mel distance {report.mean_pairwise_distance:.4f}, mean f0 std {report.mean_f0_std:.3f} Hz")


def cmd_eval_classifier(ctx: RunContext, args) -> None:
    from intonation_vc.phoneme import (
        accuracy_from_confusion,
        confusion_matrix,
        labeled_mels,
        most_confused_pairs,
    )
    from intonation_vc.signal import FrontEnd

    corpus = _load_corpus(ctx, args.corpus)
    model = _load_model(ctx, "--classifier", args.classifier, "classifier.ckpt")
    utterances = {"held-out": corpus.held_out, "train": corpus.train, "all": corpus.utterances}[args.split]
    dataset = labeled_mels(utterances, FrontEnd(ctx.config.signal))
    confusion = confusion_matrix(model, dataset, ctx.config.workers)
    accuracy = accuracy_from_confusion(confusion)
    symbols = model.inventory.symbols

    conf_path = ctx.out_dir / "confusion.csv"
    conf_path.parent.mkdir(parents=True, exist_ok=True)
    with open(conf_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["truth", *symbols])
        for symbol, row in zip(symbols, confusion):
            writer.writerow([symbol, *(int(v) for v in row)])
    pairs = [
        {"truth": symbols[i], "predicted": symbols[j], "frames": count}
        for i, j, count in most_confused_pairs(confusion, args.top)
    ]
    ctx.add(conf_path, write_summary(ctx.out_dir / "classifier_eval.yaml",
                                     {"split": args.split, "top1_accuracy": accuracy, "most_confused": pairs}))
    print(f"Top-1 frame accuracy on {args.split}: {accuracy:.4f}")
    for pair in pairs:
        print(f"  {pair['truth']} -> {pair['predicted']}: {pair['frames']} frames")


def cmd_plot(ctx: RunContext, args) -> None:
    from intonation_vc.harness import load_checkpoint
    from intonation_vc.signal import LinSpectrogram, write_pgm

    path = Path(args.spectrogram)
    if path.suffix == ".npy":
        mags = np.load(path)
    else:
        spectrogram = load_checkpoint(path)
        if not isinstance(spectrogram, LinSpectrogram):
            raise IntonationVCError(f"{path} holds a {type(spectrogram).__name__}, not a spectrogram")
        mags = spectrogram.mags
    image = np.log(np.maximum(np.asarray(mags, dtype=np.float64), ctx.config.signal.log_floor))
    out = ctx.out_dir / f"{path.stem}.pgm"
    ctx.add(write_pgm(out, image))
    print(f"Wrote {out}")


def cmd_replay(ctx: RunContext, args) -> None:
    from intonation_vc.harness import load_manifest, verify_manifest

    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.yaml"
    argv = ["--config", str(manifest_path.resolve()), "--out", str(ctx.out_dir)] + strip_global_options(manifest.argv)
    print(f"Replaying '{manifest.command}' into {ctx.out_dir}")
    run(argv)
    mismatched = verify_manifest(manifest, ctx.out_dir)
    if mismatched:
        raise IntonationVCError(f"Replay differs in {len(mismatched)} artifacts: {', '.join(mismatched)}")
    print(f"✓ All {len(manifest.artifacts)} artifacts reproduced byte-identically")


def handle_config_command(args) -> None:
    """Handle configuration management commands."""
    if not getattr(args, "config_action", None):
        print("Error: No configuration action specified.")
        print("Available actions: show, validate")
        sys.exit(1)

    config_manager = get_config_manager()
    if args.config_action == "show":
        if args.format == "json":
            print(config_manager.to_json())
        elif args.format == "flat":
            print(config_manager.to_flat())
        else:
            print(config_manager.to_yaml())
    elif args.config_action == "validate":
        is_valid, error = config_manager.validate_config_file(args.file)
        if is_valid:
            print(f"✓ Configuration file '{args.file}' is valid.")
        else:
            print(f"✗ Configuration file '{args.file}' is invalid:")
            print(f"  {error}")
            sys.exit(1)


COMMANDS = {
    "gen-corpus": cmd_gen_corpus,
    "train-classifier": cmd_train_classifier,
    "train-synth": cmd_train_synth,
    "convert": cmd_convert,
    "interpolate": cmd_interpolate,
    "diversity": cmd_diversity,
    "eval-classifier": cmd_eval_classifier,
    "plot": cmd_plot,
    "replay": cmd_replay,
}


def build_parser() -> argparse.ArgumentParser:
    # Global options are accepted before or after the subcommand.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_file", default=argparse.SUPPRESS,
                        help="Configuration file (.yaml, .json, .cfg or a run manifest)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="Output directory (default: out)")
    common.add_argument("--set", dest="overrides", action="append", default=argparse.SUPPRESS,
                        metavar="KEY=VALUE", help="Override one configuration value (repeatable)")
    common.add_argument("--log-level", default=argparse.SUPPRESS,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], help="Logging level")

    parser = argparse.ArgumentParser(
        prog="intonation-vc",
        description="Intonation VC - many-to-one voice conversion with sampled intonation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[common],
        epilog="""
Examples:
  # Build a synthetic corpus and train both stages
  intonation-vc gen-corpus --out runs/demo
  intonation-vc train-classifier --out runs/demo
  intonation-vc train-synth --flow --out runs/demo

  # Convert with a reproducible noise draw
  intonation-vc convert --in speech.wav --seed 7 --out runs/demo

  # Interpolate between two noise vectors
  intonation-vc interpolate --in speech.wav --eps1 a.txt --eps2 b.txt --steps 21 --out runs/sweep

  # Re-run from a manifest and check every artifact
  intonation-vc replay --manifest runs/demo/manifest.yaml --out runs/check

  # Configuration management
  intonation-vc config show
  intonation-vc config validate --file config/production.yaml
        """,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    gen_parser = subparsers.add_parser("gen-corpus", parents=[common], help="Generate a synthetic labeled corpus")
    gen_parser.add_argument("--seed", type=int, help="Root seed (overrides the configured seed)")
    gen_parser.add_argument("--utterances", type=int, help="Number of utterances")
    gen_parser.add_argument("--inventory", help="Inventory file, one phoneme symbol per line")

    cls_parser = subparsers.add_parser("train-classifier", parents=[common], help="Train the phoneme classifier")
    cls_parser.add_argument("--corpus", help="Corpus directory (default: <out>/corpus)")
    cls_parser.add_argument("--seed", type=int, help="Root seed (overrides the configured seed)")

    syn_parser = subparsers.add_parser("train-synth", parents=[common], help="Train the synthesizer")
    syn_parser.add_argument("--corpus", help="Corpus directory (default: <out>/corpus)")
    syn_parser.add_argument("--classifier", help="Classifier checkpoint (default: <out>/classifier.ckpt)")
    syn_parser.add_argument("--seed", type=int, help="Root seed (overrides the configured seed)")
    variant = syn_parser.add_mutually_exclusive_group()
    variant.add_argument("--flow", action="store_true", help="Use the inverse autoregressive flow posterior")
    variant.add_argument("--baseline", action="store_true", help="Train the deterministic baseline")

    def add_engine_options(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--in", dest="input", required=True, help="Source WAV file (16-bit PCM mono)")
        sub.add_argument("--classifier", help="Classifier checkpoint (default: <out>/classifier.ckpt)")
        sub.add_argument("--synth", help="Synthesizer checkpoint (default: <out>/synth.ckpt)")

    conv_parser = subparsers.add_parser("convert", parents=[common], help="Convert one utterance")
    add_engine_options(conv_parser)
    conv_parser.add_argument("--seed", type=int, required=True, help="Seed of the noise draw")
    conv_parser.add_argument("--clamp", type=float, help="Per-coordinate clamp radius of the noise draw")

    int_parser = subparsers.add_parser("interpolate", parents=[common], help="Interpolate between two noise vectors")
    add_engine_options(int_parser)
    int_parser.add_argument("--eps1", required=True, help="First noise vector (text or .npy)")
    int_parser.add_argument("--eps2", required=True, help="Second noise vector (text or .npy)")
    int_parser.add_argument("--steps", type=int, required=True, help="Number of weights including both endpoints")

    div_parser = subparsers.add_parser("diversity", parents=[common], help="Measure spread over several noise draws")
    add_engine_options(div_parser)
    div_parser.add_argument("--samples", type=int, required=True, help="Number of conversions")

    eval_parser = subparsers.add_parser("eval-classifier", parents=[common], help="Confusion matrix and accuracy")
    eval_parser.add_argument("--corpus", help="Corpus directory (default: <out>/corpus)")
    eval_parser.add_argument("--classifier", help="Classifier checkpoint (default: <out>/classifier.ckpt)")
    eval_parser.add_argument("--split", choices=["held-out", "train", "all"], default="held-out")
    eval_parser.add_argument("--top", type=int, default=5, help="Most confused pairs to report")

    plot_parser = subparsers.add_parser("plot", parents=[common], help="Render a stored spectrogram to PGM")
    plot_parser.add_argument("spectrogram", help="Spectrogram checkpoint or .npy magnitude matrix")

    replay_parser = subparsers.add_parser("replay", parents=[common], help="Re-execute a run from its manifest")
    replay_parser.add_argument("--manifest", required=True, help="manifest.yaml (or the directory holding it)")

    config_parser = subparsers.add_parser("config", parents=[common], help="Configuration management")
    config_subparsers = config_parser.add_subparsers(dest="config_action", help="Configuration actions")
    show_parser = config_subparsers.add_parser("show", parents=[common], help="Display current configuration")
    show_parser.add_argument("--format", choices=["yaml", "json", "flat"], default="yaml", help="Output format")
    validate_parser = config_subparsers.add_parser("validate", parents=[common], help="Validate configuration file")
    validate_parser.add_argument("--file", required=True, help="Configuration file to validate")

    return parser


def command_overrides(args) -> List[str]:
    """Configuration overrides implied by subcommand flags."""
    overrides = []
    if args.command in ("gen-corpus", "train-classifier", "train-synth") and args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.command == "gen-corpus" and args.utterances is not None:
        overrides.append(f"corpus.utterances={args.utterances}")
    if args.command == "train-synth":
        if args.flow:
            overrides.append("synth.use_flow=true")
        if args.baseline:
            overrides.append("synth.baseline=true")
    if args.command == "convert":
        overrides.append(f"sampler.seed={args.seed}")
        if args.clamp is not None:
            overrides.append(f"sampler.clamp_radius={args.clamp}")
    if args.command == "diversity":
        overrides.append(f"sampler.num_samples={args.samples}")
    log_level = getattr(args, "log_level", None)
    if log_level:
        overrides.append(f"logging.level={log_level}")
    return overrides


def run(argv: Sequence[str]) -> Optional[RunContext]:
    """Parse ``argv``, execute the command and write its manifest; errors propagate."""
    from intonation_vc.harness import build_manifest, write_manifest

    parser = build_parser()
    args = parser.parse_args(list(argv))
    if not args.command:
        parser.print_help()
        sys.exit(2)

    overrides = list(getattr(args, "overrides", None) or []) + command_overrides(args)
    reload_config(getattr(args, "config_file", None), overrides)
    config = get_config()
    configure_logging(config.logging)

    if args.command == "config":
        handle_config_command(args)
        return None

    out_dir = Path(getattr(args, "out", None) or "out")
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(args.command, list(argv), config, out_dir)
    COMMANDS[args.command](ctx, args)

    if args.command != "replay":
        manifest = build_manifest(args.command, recorded_argv(argv, ctx.defaulted_inputs), config, out_dir,
                                  ctx.artifacts)
        write_manifest(manifest, out_dir)
    return ctx


def main(argv: Optional[Sequence[str]] = None) -> None:
    load_dotenv()
    try:
        run(sys.argv[1:] if argv is None else argv)
    except KeyboardInterrupt:
        print("\n\nOperation cancelled by user.")
        sys.exit(1)
    except (IntonationVCError, ValueError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
