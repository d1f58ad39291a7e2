"""osteomorph command-line interface.

Subcommands: morph (shape features + grouped stats + plots), eval
(segmentation metrics), classify (KNN pain-status report), synth
(synthetic mask generation).  Options may also come from a key=value
config file via --config; explicit flags override file values, which
override defaults.  Exit status: 0 success, 1 partial (some images
skipped), 2 configuration or input error.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import __version__
from .errors import OsteomorphError
from .masks import CLASS_IDS
from .report import ConfigError, RunConfig, cmd_classify, cmd_eval, cmd_morph, cmd_synth
from .synth import SHAPE_KINDS, SyntheticSpec, make_demo_dataset

_CONFIG_KEYS = ("manifest", "out", "bones", "agg", "k", "resize", "split", "plots", "contours")


def _parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value
    return values


def _parse_bones(text: str) -> tuple[int, ...]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    if not names:
        raise ConfigError("bones must name at least one of: " + ", ".join(CLASS_IDS))
    try:
        return tuple(CLASS_IDS[name] for name in names)
    except KeyError as exc:
        raise ConfigError(f"unknown bone {exc.args[0]!r}") from None


def _parse_resize(text: str) -> tuple[int, int] | None:
    if text.lower() == "none":
        return None
    try:
        w, h = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"resize must look like 640x640 or none, got {text!r}") from None
    if w <= 0 or h <= 0:
        raise ConfigError(f"resize dimensions must be positive, got {text!r}")
    return (w, h)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _resolve(cli_value, file_values: dict[str, str], key: str, parse, default):
    # Precedence: explicit flag > config file > default.
    if cli_value is not None and cli_value is not False:
        return cli_value
    if key in file_values:
        return parse(file_values[key])
    return default


def _build_config(command: str, manifest, out, bones, agg, k, resize, split,
                  plots, contours, config_file) -> RunConfig:
    file_values = _parse_config_file(config_file) if config_file else {}
    manifest = _resolve(manifest, file_values, "manifest", Path, None)
    out = _resolve(out, file_values, "out", Path, None)
    if manifest is None:
        raise ConfigError("a manifest is required (--manifest or config file)")
    if out is None:
        raise ConfigError("an output directory is required (--out or config file)")
    # Resolve the raw strings first so an explicit "--resize none" still
    # beats a config-file value, then parse.
    return RunConfig(
        manifest=Path(manifest),
        out=Path(out),
        bones=_parse_bones(_resolve(bones, file_values, "bones", str, "femur,tibia")),
        agg=_resolve(agg, file_values, "agg", str, "macro"),
        k=_resolve(k, file_values, "k", int, None),
        resize=_parse_resize(_resolve(resize, file_values, "resize", str, "640x640")),
        split=_resolve(split, file_values, "split", str, "all"),
        plots=_resolve(plots or None, file_values, "plots", _parse_bool, False),
        dump_contours=_resolve(contours or None, file_values, "contours", _parse_bool, False),
        command=command,
    )


def _run(command: str, body, **kwargs) -> None:
    try:
        config = _build_config(command, **kwargs)
        code = body(config)
    except (OsteomorphError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(code)


def _common_options(fn):
    fn = click.option("--manifest", type=click.Path(), default=None,
                      help="Dataset manifest CSV.")(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="Output directory.")(fn)
    fn = click.option("--bones", default=None, help="Comma-separated bones (femur,tibia).")(fn)
    fn = click.option("--resize", default=None,
                      help="Resize masks to WxH before processing, or 'none'. Default 640x640.")(fn)
    fn = click.option("--split", default=None,
                      type=click.Choice(["all", "train", "val", "test"]),
                      help="Restrict to one split (default all).")(fn)
    fn = click.option("--config", "config_file", type=click.Path(exists=True), default=None,
                      help="key=value config file; flags override it.")(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="osteomorph")
def main() -> None:
    """Bone morphometry, segmentation scoring, and pain classification."""
    logging.basicConfig(
        level=logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


@main.command()
@_common_options
@click.option("--plots", is_flag=True, default=False,
              help="Also render SVG bar plots of the grouped stats.")
@click.option("--contours", is_flag=True, default=False,
              help="Dump per-image contour CSVs for plotting.")
def morph(manifest, out, bones, resize, split, config_file, plots, contours) -> None:
    """Compute per-bone shape features and group them by pain category."""
    _run("morph", cmd_morph, manifest=manifest, out=out, bones=bones, agg=None, k=None,
         resize=resize, split=split, plots=plots, contours=contours,
         config_file=config_file)


@main.command(name="eval")
@_common_options
@click.option("--agg", default=None, type=click.Choice(["macro", "micro"]),
              help="Aggregation across images: macro (mean of per-image scores, default) "
                   "or micro (pooled counts).")
def eval_cmd(manifest, out, bones, resize, split, config_file, agg) -> None:
    """Score predicted masks against ground truth."""
    _run("eval", cmd_eval, manifest=manifest, out=out, bones=bones, agg=agg, k=None,
         resize=resize, split=split, plots=False, contours=False,
         config_file=config_file)


@main.command()
@_common_options
@click.option("--k", type=int, default=None,
              help="Fix the neighbor count instead of selecting it on the val split.")
def classify(manifest, out, bones, resize, split, config_file, k) -> None:
    """Train and score the KNN pain-status classifier."""
    _run("classify", cmd_classify, manifest=manifest, out=out, bones=bones, agg=None,
         k=k, resize=resize, split=split, plots=False, contours=False,
         config_file=config_file)


@main.command()
@click.option("--out", type=click.Path(), required=True,
              help="Mask file to write (or dataset directory with --demo).")
@click.option("--shape", type=click.Choice(SHAPE_KINDS), default="disk")
@click.option("--size", default="100",
              help="Shape size in px: radius, or 'a,b' axes, or 'w,h' sides.")
@click.option("--center", default=None, help="Shape center as 'x,y' (default canvas center).")
@click.option("--label", type=int, default=1, help="Class label to paint (1 femur, 2 tibia).")
@click.option("--canvas", default="640x640", help="Canvas size WxH.")
@click.option("--demo", is_flag=True, default=False,
              help="Write a full synthetic dataset (masks + manifest) instead.")
@click.option("--n-images", type=int, default=12, help="Demo dataset size.")
@click.option("--seed", type=int, default=0, help="Demo dataset RNG seed.")
def synth(out, shape, size, center, label, canvas, demo, n_images, seed) -> None:
    """Generate synthetic masks (single shape, or a demo dataset)."""
    try:
        dims = _parse_resize(canvas)
        if dims is None:
            raise ConfigError("canvas must be WxH")
        w, h = dims
        if demo:
            manifest = make_demo_dataset(out, n_images=n_images, canvas=(w, h), seed=seed)
            click.echo(f"wrote {manifest}")
            return
        params = tuple(float(part) for part in size.replace("x", ",").split(","))
        if center is None:
            cx, cy = (w - 1) / 2, (h - 1) / 2
        else:
            cx, cy = (float(part) for part in center.split(","))
        spec = SyntheticSpec(shape=shape, params=params, center=(cx, cy),
                             label=label, canvas=(w, h))
        cmd_synth(spec, Path(out))
    except (OsteomorphError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
