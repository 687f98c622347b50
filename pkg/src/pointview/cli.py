"""Command-line interface.

Subcommands: project, zeroshot, fewshot-train, eval, ensemble, bench.
Usage errors exit with status 2 (argparse), runtime failures print one
line to stderr and exit with status 1. Any subcommand accepts --config
pointing at a key=value file whose entries act as flag defaults; explicit
flags always win.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .adapter import (DEFAULT_TRAIN_SCALE, TrainConfig, checkpoint_load,
                      checkpoint_save, evaluate_with_adapter, train,
                      write_trace_csv)
from .cloud import (CLOUD_FORMATS, PointCloud, kshot_sample, load_cloud,
                    normalize_unit_cube, read_manifest)
from .ensemble import fuse, logit_stats, search_ratio
from .errors import DomainError, PointViewError
from .features import (PrecomputedProvider, ToyProvider, classifier_matrix,
                       store_read)
from .projection import (PROJECTION_PRESETS, ProjectionSettings, occupancy,
                         project_view, resize_bilinear, view_set, write_pgm)
from .zeroshot import (VIEW_WEIGHT_PRESETS, evaluate, read_logits_csv,
                       write_logits_csv)

_DEFAULT_SETTINGS = ProjectionSettings(distance=1.6, side=121)


def _parse_config_file(path: str) -> dict:
    """Read a key = value file; '#' starts a comment, blank lines skipped."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise DomainError(f"{path}:{lineno}: expected key = value")
        key, raw = (part.strip() for part in text.split("=", 1))
        key = key.replace("-", "_")
        if raw.lower() in ("true", "false"):
            values[key] = raw.lower() == "true"
            continue
        if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
            values[key] = raw[1:-1]
            continue
        try:
            values[key] = int(raw)
        except ValueError:
            try:
                values[key] = float(raw)
            except ValueError:
                values[key] = raw
    return values


def _settings_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=sorted(PROJECTION_PRESETS),
                        help="named distance/side/view-weight bundle")
    parser.add_argument("--distance", type=float, help="view-axis offset (> 1)")
    parser.add_argument("--side", type=int, help="raster side length in pixels")
    parser.add_argument("--focal", type=float, help="pixel scale of the projection")
    parser.add_argument("--target", type=int, help="resized side length for encoders")


def _resolve_settings(args) -> ProjectionSettings:
    base = PROJECTION_PRESETS[args.preset] if args.preset else _DEFAULT_SETTINGS
    return ProjectionSettings(
        distance=args.distance if args.distance is not None else base.distance,
        side=args.side if args.side is not None else base.side,
        focal=args.focal if args.focal is not None else base.focal,
        target=args.target if args.target is not None else base.target,
    )


def _provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--features", help="precomputed embedding store (.pcem)")
    parser.add_argument("--toy-seed", type=int, help="seed for the toy encoder")
    parser.add_argument("--dim", type=int, help="feature width for the toy encoder")


def _resolve_provider(args):
    if args.features:
        return PrecomputedProvider(store_read(args.features))
    if args.toy_seed is None or args.dim is None:
        raise DomainError("pass either --features or both --toy-seed and --dim")
    return ToyProvider(args.toy_seed, args.dim)


def _parse_alpha(text: str, n_views: int) -> np.ndarray:
    try:
        values = np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError as exc:
        raise DomainError(f"--alpha must be comma-separated floats, got {text!r}") from exc
    if values.shape != (n_views,):
        raise DomainError(f"--alpha lists {values.size} weights but there are {n_views} views")
    return values


def _resolve_alpha(args, n_views: int) -> np.ndarray | None:
    if getattr(args, "alpha", None):
        return _parse_alpha(args.alpha, n_views)
    if args.preset:
        weights = VIEW_WEIGHT_PRESETS[args.preset]
        if n_views != len(weights):
            raise DomainError(f"preset view weights cover {len(weights)} views; "
                              f"pass --alpha for {n_views} views")
        return np.array(weights, dtype=np.float64)
    return None


def _print_eval(result, scale: float) -> None:
    print(f"top1 {result.accuracy:.4f} on {len(result.table)} samples (scale={scale:g})")
    for name, acc in result.per_class.items():
        shown = "n/a" if acc != acc else f"{acc:.4f}"
        print(f"  {name:<20s} {shown}")


def cmd_project(args) -> int:
    cloud = normalize_unit_cube(load_cloud(args.input, args.format))
    settings = _resolve_settings(args)
    views = view_set(args.views)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for view in views:
        raw = project_view(cloud, view, settings)
        depth_map = raw if args.pgm == "raw" else resize_bilinear(raw, settings.target)
        out_path = out_dir / f"{cloud.id}_{view.name}.pgm"
        write_pgm(depth_map, out_path)
        print(f"{view.name:<20s} occupancy {occupancy(raw):.4f}  -> {out_path}")
    return 0


def cmd_zeroshot(args) -> int:
    manifest = read_manifest(args.manifest, args.classes)
    classifier = classifier_matrix(store_read(args.classifier), manifest.class_names)
    provider = _resolve_provider(args)
    if provider.dim != classifier.shape[1]:
        raise DomainError(f"provider width {provider.dim} does not match "
                          f"classifier width {classifier.shape[1]}")
    views = view_set(args.views)
    settings = _resolve_settings(args)
    weights = _resolve_alpha(args, len(views))
    result = evaluate(manifest, provider, classifier, views, settings, weights,
                      scale=args.scale, threads=args.threads)
    shown = weights if weights is not None else np.ones(len(views))
    print(f"views={args.views} distance={settings.distance:g} side={settings.side} "
          f"focal={settings.focal:g} target={settings.target}")
    print("alpha=" + ",".join(f"{v:g}" for v in shown))
    _print_eval(result, args.scale)
    if args.logits_out:
        write_logits_csv(result.table, args.logits_out)
        print(f"logits -> {args.logits_out}")
    return 0


def cmd_fewshot_train(args) -> int:
    manifest = read_manifest(args.manifest, args.classes)
    classifier = classifier_matrix(store_read(args.classifier), manifest.class_names)
    provider = _resolve_provider(args)
    if provider.dim != classifier.shape[1]:
        raise DomainError(f"provider width {provider.dim} does not match "
                          f"classifier width {classifier.shape[1]}")
    views = view_set(args.views)
    settings = _resolve_settings(args)
    config = TrainConfig(shots=args.shots, epochs=args.epochs, batch_size=args.batch_size,
                         lr0=args.lr, momentum=args.momentum, smooth_eps=args.smooth_eps,
                         seed=args.seed)
    if args.alpha_init == "ones":
        alpha_init = None
    elif args.alpha_init == "preset":
        if not args.preset:
            raise DomainError("--alpha-init preset needs --preset")
        weights = VIEW_WEIGHT_PRESETS[args.preset]
        if len(views) != len(weights):
            raise DomainError(f"preset view weights cover {len(weights)} views; "
                              f"--views {args.views} has {len(views)}")
        alpha_init = np.array(weights, dtype=np.float64)
    else:
        alpha_init = _parse_alpha(args.alpha_init, len(views))
    shots = kshot_sample(manifest, config.shots, config.seed)
    params, trace = train(shots, provider, classifier, views, settings, config,
                          augment=None if args.augment == "none" else args.augment,
                          beta=args.beta, hidden=args.hidden, alpha_init=alpha_init,
                          scale=args.scale)
    checkpoint_save(params, args.out)
    if trace:
        last = trace[-1]
        print(f"trained {config.epochs} epochs on {len(shots)} samples; "
              f"final loss {last.mean_loss:.6f}, train acc {last.train_acc:.4f}")
    else:
        print(f"trained 0 epochs on {len(shots)} samples; checkpoint holds the init")
    print(f"checkpoint -> {args.out}")
    if args.trace_out:
        write_trace_csv(trace, args.trace_out)
        print(f"trace -> {args.trace_out}")
    return 0


def cmd_eval(args) -> int:
    manifest = read_manifest(args.manifest, args.classes)
    classifier = classifier_matrix(store_read(args.classifier), manifest.class_names)
    provider = _resolve_provider(args)
    if provider.dim != classifier.shape[1]:
        raise DomainError(f"provider width {provider.dim} does not match "
                          f"classifier width {classifier.shape[1]}")
    views = view_set(args.views)
    settings = _resolve_settings(args)
    params = checkpoint_load(args.adapter)
    if params.dim != classifier.shape[1]:
        raise DomainError(f"checkpoint width {params.dim} does not match "
                          f"classifier width {classifier.shape[1]}")
    result = evaluate_with_adapter(manifest, provider, classifier, views, settings,
                                   params, scale=args.scale, threads=args.threads)
    print(f"views={args.views} distance={settings.distance:g} side={settings.side} "
          f"focal={settings.focal:g} target={settings.target} beta={params.beta:g}")
    print("alpha=" + ",".join(f"{v:g}" for v in params.alpha))
    _print_eval(result, args.scale)
    if args.logits_out:
        write_logits_csv(result.table, args.logits_out)
        print(f"logits -> {args.logits_out}")
    return 0


def cmd_ensemble(args) -> int:
    table_a = read_logits_csv(args.a)
    table_b = read_logits_csv(args.b)
    for tag, table in (("A", table_a), ("B", table_b)):
        stats = logit_stats(table)
        print(f"{tag}: acc {table.accuracy():.4f}  logits mean {stats['mean']:.4g} "
              f"std {stats['std']:.4g} min {stats['min']:.4g} max {stats['max']:.4g}")
    if args.ratio == "auto":
        result = search_ratio(table_a, table_b, softmax_space=args.softmax_space)
        for ratio, acc in result.curve:
            print(f"  r={ratio:.2f} acc {acc:.4f}")
        print(f"best r={result.best_ratio:.2f} acc {result.best_accuracy:.4f}")
    else:
        try:
            ratio = float(args.ratio)
        except ValueError:
            raise DomainError(f"--ratio must be a float or 'auto', got {args.ratio!r}") from None
        fused = fuse(table_a, table_b, ratio, softmax_space=args.softmax_space)
        print(f"fused r={ratio:g} acc {fused.accuracy():.4f}")
    return 0


def cmd_bench(args) -> int:
    if args.iters < 1:
        raise DomainError(f"--iters must be >= 1, got {args.iters}")
    rng = np.random.default_rng(args.seed)
    cloud = PointCloud(rng.uniform(-1.0, 1.0, size=(args.n_points, 3)), id="bench")
    settings = _resolve_settings(args)
    views = view_set(args.views)
    for view in views:  # warm-up
        project_view(cloud, view, settings)
    per_view_ms = []
    for _ in range(args.iters):
        start = time.perf_counter()
        for view in views:
            project_view(cloud, view, settings)
        elapsed = time.perf_counter() - start
        per_view_ms.append(1000.0 * elapsed / len(views))
    mean = float(np.mean(per_view_ms))
    std = float(np.std(per_view_ms))
    total_s = sum(per_view_ms) / 1000.0 * len(views)
    throughput = args.n_points * len(views) * args.iters / total_s
    print(f"{args.n_points} points x {len(views)} views x {args.iters} iters "
          f"at side {settings.side}")
    print(f"per view: {mean:.3f} ms mean, {std:.3f} ms std")
    print(f"throughput: {throughput:,.0f} point-views/s")
    return 0


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="pointview",
                                     description="Multi-view depth-map classification toolkit")
    parser.add_argument("--version", action="version", version=f"pointview {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, argparse.ArgumentParser] = {}

    def new_command(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value file of flag defaults")
        p.set_defaults(func=func)
        commands[name] = p
        return p

    p = new_command("project", cmd_project, "render depth-map PGMs for one cloud")
    p.add_argument("--input", required=True, help="point-cloud file")
    p.add_argument("--format", default="auto", choices=("auto",) + CLOUD_FORMATS)
    p.add_argument("--views", default="zs6", choices=("zs6", "zs12", "fs10"))
    _settings_flags(p)
    p.add_argument("--out-dir", default=".", help="directory for <id>_<view>.pgm files")
    p.add_argument("--pgm", default="resized", choices=("resized", "raw"),
                   help="write maps resized to target (default) or at raw side")

    p = new_command("zeroshot", cmd_zeroshot, "evaluate a manifest with a frozen classifier")
    p.add_argument("--manifest", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--classifier", required=True, help="classifier store (.pcem)")
    _provider_flags(p)
    p.add_argument("--views", default="zs6", choices=("zs6", "zs12", "fs10"))
    _settings_flags(p)
    p.add_argument("--alpha", help="comma-separated per-view weights")
    p.add_argument("--scale", type=float, default=100.0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--logits-out", help="write the per-sample logits CSV here")

    p = new_command("fewshot-train", cmd_fewshot_train, "train the inter-view adapter")
    p.add_argument("--manifest", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--classifier", required=True)
    _provider_flags(p)
    p.add_argument("--views", default="fs10", choices=("zs6", "zs12", "fs10"))
    _settings_flags(p)
    p.add_argument("--shots", type=int, default=16)
    p.add_argument("--epochs", type=int, default=250)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--smooth-eps", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=0.6)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--alpha-init", default="ones",
                   help="'ones', 'preset', or comma-separated weights")
    p.add_argument("--augment", default="none",
                   choices=("none", "scale_translate", "jitter_rotate"))
    p.add_argument("--scale", type=float, default=DEFAULT_TRAIN_SCALE,
                   help="training temperature on normalized similarities; "
                        "prediction accuracy does not depend on it")
    p.add_argument("--out", required=True, help="checkpoint path (.pcad)")
    p.add_argument("--trace-out", help="per-epoch loss trace CSV")

    p = new_command("eval", cmd_eval, "evaluate a manifest through a trained adapter")
    p.add_argument("--manifest", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--classifier", required=True)
    p.add_argument("--adapter", required=True, help="checkpoint path (.pcad)")
    _provider_flags(p)
    p.add_argument("--views", default="fs10", choices=("zs6", "zs12", "fs10"))
    _settings_flags(p)
    p.add_argument("--scale", type=float, default=100.0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--logits-out", help="write the per-sample logits CSV here")

    p = new_command("ensemble", cmd_ensemble, "fuse two logits CSVs")
    p.add_argument("--a", required=True, help="first logits CSV (weighted by r)")
    p.add_argument("--b", required=True, help="second logits CSV (weighted by 1-r)")
    p.add_argument("--ratio", default="auto", help="blend ratio in [0, 1] or 'auto'")
    p.add_argument("--softmax-space", action="store_true",
                   help="blend softmax probabilities instead of raw logits")

    p = new_command("bench", cmd_bench, "time the projector")
    p.add_argument("--n-points", type=int, default=1024)
    p.add_argument("--views", default="zs6", choices=("zs6", "zs12", "fs10"))
    _settings_flags(p)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)

    return parser, commands


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, commands = build_parser()
    # Pre-scan for --config so file values become parser defaults, which the
    # command line then overrides.
    if argv and argv[0] in commands:
        config_path = None
        for i, token in enumerate(argv):
            if token == "--config" and i + 1 < len(argv):
                config_path = argv[i + 1]
            elif token.startswith("--config="):
                config_path = token.split("=", 1)[1]
        if config_path:
            try:
                commands[argv[0]].set_defaults(**_parse_config_file(config_path))
            except (PointViewError, OSError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 1
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PointViewError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
