"""fusionqa command line: synth, fuse, evaluate, version.

Exit codes: 0 success, 1 hard failure, 2 completed with flagged cells.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import FusionQAError
from .fusion import FusionMethod, SynthSpec, fuse, synth_scene
from .raster import (MultibandImage, SceneBundle, load_band, save_band, upsample_nearest)
from .report import HPDI_MODES, evaluate
from .spatial import NORMALIZERS

EXIT_OK, EXIT_FAIL, EXIT_FLAGGED = 0, 1, 2

DEFAULTS = {"peak": 255.0, "lowpass": 5, "hpdi": "both", "sg_normalizer": "printed"}
RESERVED_METHODS = ("MS", "PAN")


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which here means "flagged cells"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _band_names(arg: str | None, count: int) -> list[str]:
    if arg:
        names = _split(arg)
        if len(names) != count:
            raise CLIError(f"--bands lists {len(names)} names for {count} band files")
        return names
    return ["R", "G", "B"] if count == 3 else [f"B{k + 1}" for k in range(count)]


def _load_image(paths: list[str], names: list[str], flag: str) -> MultibandImage:
    for p in paths:
        if not Path(p).is_file():
            raise CLIError(f"{flag}: file not found: {p}")
    return MultibandImage(tuple((n, load_band(p)) for n, p in zip(names, paths)))


def _to_pan_size(ms: MultibandImage, pan, flag: str) -> MultibandImage:
    if ms.shape == pan.shape:
        return ms
    try:
        return upsample_nearest(ms, pan.rows, pan.cols)
    except FusionQAError as exc:
        raise CLIError(f"{flag}: {exc}") from None


def cmd_synth(args) -> int:
    spec = SynthSpec(rows=args.rows, cols=args.cols, scale=args.scale, seed=args.seed,
                     texture_octaves=args.octaves)
    scene = synth_scene(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"pan": "pan.pgm"}
    save_band(scene.pan, out / "pan.pgm")
    for name, band in scene.ms_low:
        files[f"ms_low_{name.lower()}"] = f"ms_low_{name.lower()}.pgm"
        save_band(band, out / f"ms_low_{name.lower()}.pgm")
    for name, band in scene.truth:
        files[f"truth_{name.lower()}"] = f"truth_{name.lower()}.pgm"
        save_band(band, out / f"truth_{name.lower()}.pgm")
    manifest = {"rows": spec.rows, "cols": spec.cols, "scale": spec.scale, "seed": spec.seed,
                "texture_octaves": spec.texture_octaves, "bit_depth": spec.bit_depth,
                "ms_low_shape": list(scene.ms_low.shape), "bands": scene.ms_low.names,
                "files": files, "version": __version__}
    text = json.dumps(manifest, indent=2) + "\n"
    (out / "manifest.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_fuse(args) -> int:
    if not Path(args.pan).is_file():
        raise CLIError(f"--pan: file not found: {args.pan}")
    pan = load_band(args.pan)
    paths = _split(args.ms)
    names = _band_names(args.bands, len(paths))
    ms_low = _load_image(paths, names, "--ms")
    method = FusionMethod(args.method, args.lowpass_size)
    if method.name == "IHS" and len(ms_low) != 3:
        raise CLIError(f"IHS requires 3 bands, got {len(ms_low)}")
    ms_up = _to_pan_size(ms_low, pan, "--ms")
    fused = fuse(SceneBundle(pan=pan, ms_low=ms_low, ms_up=ms_up), method)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, band in fused:
        path = out / f"fused_{name.lower()}.pgm"
        save_band(band, path)
        print(path)
    return EXIT_OK


def _parse_group(text: str) -> tuple[str, list[str]]:
    name, sep, paths = text.partition("=")
    if not sep or not name.strip() or not paths.strip():
        raise CLIError(f"--fused expects NAME=path1,path2,..., got {text!r}")
    name = name.strip()
    if name.upper() in RESERVED_METHODS:
        raise CLIError(f"--fused: method name {name!r} is reserved for reference rows")
    return name, _split(paths)


def cmd_evaluate(args) -> int:
    if not Path(args.pan).is_file():
        raise CLIError(f"--pan: file not found: {args.pan}")
    pan = load_band(args.pan)
    ref_paths = _split(args.reference)
    names = _band_names(args.bands, len(ref_paths))
    reference = _to_pan_size(_load_image(ref_paths, names, "--reference"), pan, "--reference")
    groups, group_cfg = [], []
    for text in args.fused:
        name, paths = _parse_group(text)
        if name in [g[0] for g in groups]:
            raise CLIError(f"--fused: duplicate method name {name!r}")
        if len(paths) != len(names):
            raise CLIError(f"--fused {name}: {len(paths)} files for {len(names)} bands")
        image = _load_image(paths, names, f"--fused {name}")
        if image.shape != pan.shape:
            raise CLIError(f"--fused {name}: image is {image.shape[0]}x{image.shape[1]} "
                           f"but PAN is {pan.rows}x{pan.cols}")
        groups.append((name, image))
        group_cfg.append({"name": name, "paths": paths})
    config = {"reference": ref_paths, "pan": args.pan, "fused": group_cfg}
    report = evaluate(reference, pan, groups, scene_id=args.scene_id, peak=args.peak,
                      hpdi=args.hpdi, sg_normalizer=args.sg_normalizer, config=config)
    formats = args.format or ["json"]
    rendered = [(fmt, report.render(fmt)) for fmt in formats]
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for fmt, text in rendered:
            (out / f"report.{fmt}").write_text(text)
        (out / "report_long.csv").write_text(report.to_long_csv())
    else:
        for _, text in rendered:
            sys.stdout.write(text)
    if report.flagged:
        print("fusionqa: completed with flagged cells", file=sys.stderr)
        return EXIT_FLAGGED
    return EXIT_OK


def cmd_version(args) -> int:
    if args.json:
        print(json.dumps({"version": __version__, "defaults": DEFAULTS}))
    else:
        print(f"fusionqa {__version__} defaults: peak={DEFAULTS['peak']:g} "
              f"lowpass={DEFAULTS['lowpass']} hpdi={DEFAULTS['hpdi']} "
              f"sg-normalizer={DEFAULTS['sg_normalizer']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fusionqa", description="Quality assessment for pan-sharpened imagery.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a deterministic synthetic PAN/MS/truth scene")
    p.add_argument("--rows", type=int, default=64)
    p.add_argument("--cols", type=int, default=64)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--octaves", type=int, default=5, help="value-noise octaves")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser(
        "fuse", help="run a reference fusion method",
        description="Reference fusion generators (upsample, IHS, HFA, HFM). Feature-level "
                    "methods such as segment fusion are not provided.")
    p.add_argument("--pan", required=True)
    p.add_argument("--ms", required=True, help="comma-separated MS band files (e.g. r,g,b)")
    p.add_argument("--bands", help="comma-separated band names (default R,G,B)")
    p.add_argument("--method", required=True, choices=["upsample", "ihs", "hfa", "hfm"])
    p.add_argument("--lowpass-size", type=int, default=DEFAULTS["lowpass"])
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="compute spectral and spatial metrics")
    p.add_argument("--reference", required=True, help="comma-separated MS band files")
    p.add_argument("--pan", required=True)
    p.add_argument("--fused", action="append", required=True, metavar="NAME=PATHS",
                   help="fused product as NAME=r,g,b files; repeat for several methods")
    p.add_argument("--bands", help="comma-separated band names (default R,G,B)")
    p.add_argument("--format", action="append", choices=["csv", "json", "md"],
                   help="report format; repeatable (default json)")
    p.add_argument("--peak", type=float, default=DEFAULTS["peak"], help="NRMSE peak DN")
    p.add_argument("--hpdi", choices=HPDI_MODES, default=DEFAULTS["hpdi"])
    p.add_argument("--sg-normalizer", choices=NORMALIZERS, default=DEFAULTS["sg_normalizer"])
    p.add_argument("--scene-id", default="scene")
    p.add_argument("--out-dir", help="write report.<fmt> and report_long.csv here "
                                     "instead of printing")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("version", help="print version and config defaults")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_version)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CLIError, FusionQAError, ValueError, OSError) as exc:
        print(f"fusionqa {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
