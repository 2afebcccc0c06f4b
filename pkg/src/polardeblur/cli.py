"""Command line entry point: ``polardeblur <subcommand> ...``.

Array outputs use the PATD format with a ``.hdr`` sidecar and get an 8-bit
PNG preview next to them.  Experiment subcommands read a config file
(``--config``, JSON or ``key=value``) and let every flag override it.
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import fbp, polar, wavesim
from .angconv import AngularKernel, load_kernel, make_kernel, save_kernel
from .arrayio import load_array, load_grid_array, read_sidecar, save_grid_array
from .grid import CartesianImage, GridSpec, PolarImage, Sinogram, make_grid, pixel_centers
from .noise import NoiseSpec, sample_measurement_noise

log = logging.getLogger("polardeblur")


def save_preview(path, values) -> Path:
    """Min-max scaled 8-bit grayscale PNG; Cartesian images are shown with y up."""
    from PIL import Image

    arr = np.asarray(values, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    scaled = np.zeros_like(arr) if hi == lo else (arr - lo) / (hi - lo)
    png = Path(path).with_suffix(".png")
    Image.fromarray(np.round(255 * scaled).astype(np.uint8)).save(png)
    return png


def _write(path, obj, preview=True):
    out = save_grid_array(path, obj)
    if preview:
        shown = np.flipud(obj.values.T) if isinstance(obj, CartesianImage) else obj.values
        save_preview(out, shown)
    log.info("wrote %s", out)
    return out


def _kernel(name_or_path: str, N_phi: int) -> AngularKernel:
    if Path(name_or_path).is_file():
        return load_kernel(name_or_path, N_phi)
    return make_kernel(name_or_path, N_phi)


def _phantom(spec: str, M: int, seed: int) -> np.ndarray:
    """``vessel[:seed]``, ``bump[:sigma]``, a PATD Cartesian image or a picture file."""
    from .pipeline import load_image_folder, synth_vessel_phantom

    name, _, arg = spec.partition(":")
    if name == "vessel":
        return synth_vessel_phantom(int(arg) if arg else seed, M)
    if name == "bump":
        s = float(arg) if arg else 0.15
        c = pixel_centers(M)
        return np.exp(-(c[:, None] ** 2 + c[None, :] ** 2) / (2 * s * s))
    path = Path(spec)
    if not path.is_file():
        raise SystemExit(f"--phantom: {spec!r} is neither a generator nor a file")
    if path.suffix == ".patd":
        img = load_grid_array(path)
        if img.spec.M != M:
            raise SystemExit(f"--phantom grid has M={img.spec.M}, expected {M}")
        return img.values
    # a single picture, ingested the same way as an image folder
    with tempfile.TemporaryDirectory() as tmp:
        shutil.copy(path, tmp)
        imgs, _, errors = load_image_folder(tmp, M)
    if errors:
        raise SystemExit(f"--phantom: cannot read {path}: {errors[0][1]}")
    return imgs[0]


def _grid_from(args, path) -> GridSpec:
    _, spec = read_sidecar(path)
    if args.M is not None:
        want = make_grid(args.M)
        if spec is not None and spec != want:
            raise SystemExit(f"{path}: sidecar grid M={spec.M} differs from --M {args.M}")
        spec = want
    if spec is None:
        raise SystemExit(f"{path}: no sidecar; pass --M")
    return spec


def cmd_simulate(args):
    spec = make_grid(args.M)
    x = CartesianImage(_phantom(args.phantom, args.M, args.seed), spec)
    if args.kernel in (None, "none"):
        g = wavesim.forward(x)
    else:
        g = wavesim.forward_blurred(x, _kernel(args.kernel, spec.N_phi))
    if args.noise > 0:
        ns = NoiseSpec(alpha=args.noise, seed=args.seed).resolve(g)
        g = Sinogram(g.values + sample_measurement_noise(ns, spec, 0).values, spec)
        log.info("noise sigma %.6g", ns.sigma)
    _write(args.out, g)
    if args.phantom_out:
        _write(args.phantom_out, x)


def cmd_invert(args):
    spec = _grid_from(args, args.inp)
    g = Sinogram(load_array(args.inp), spec)
    _write(args.out, fbp.inverse(g, quadrature=args.quadrature))


def cmd_polar(args):
    obj = load_grid_array(args.inp)
    if args.direction == "to-polar":
        if not isinstance(obj, CartesianImage):
            raise SystemExit(f"{args.inp} holds a {obj.role} array, expected cartesian")
        _write(args.out, polar.to_polar(obj))
    else:
        if not isinstance(obj, PolarImage):
            raise SystemExit(f"{args.inp} holds a {obj.role} array, expected polar")
        _write(args.out, polar.to_cartesian(obj))


def cmd_kernel(args):
    N_phi = args.n_phi or make_grid(args.M).N_phi
    w = make_kernel(args.name, N_phi)
    save_kernel(args.out, w)
    print(f"{w.name}: {w.K} taps for N_phi={N_phi}")


def _config(args, **overrides):
    from .pipeline import ExperimentConfig

    base = ExperimentConfig.load(args.config) if getattr(args, "config", None) else ExperimentConfig()
    for item in getattr(args, "set", None) or []:
        key, _, val = item.partition("=")
        overrides[key.strip()] = val.strip()
    merged = {**base.to_dict(), **{k: v for k, v in overrides.items() if v is not None}}
    return ExperimentConfig.from_dict(merged)


def cmd_dataset(args):
    from .pipeline import build_dataset

    cfg = _config(args, M=args.M, kernel=args.kernel, alpha=args.noise, seed=args.seed,
                  image_folder=args.images, source="image-folder" if args.images else None)
    recs = build_dataset(cfg, args.out)
    if args.previews:
        for r in recs[: args.previews]:
            rdir = Path(args.out) / "records" / f"{r.id:05d}"
            for name in ("x", "observation", "oracle"):
                save_preview(rdir / f"{name}.png", np.flipud(getattr(r, name).T))
    print(f"{len(recs)} records in {args.out}")


def _train_overrides(args):
    return dict(loss=args.loss, lam=args.lam, lr=args.lr, batch=args.batch, iters=args.iters,
                seed=args.seed, kernel=args.kernel, alpha=args.noise, stop=args.stop,
                check_every=args.check_every, patience=args.patience)


_DATA_KEYS = ("M", "kernel", "alpha", "source", "image_folder", "n_train", "n_val", "n_test", "pad")


def _with_data(cfg, data_cfg, overrides=None):
    """Simulation settings come from the dataset; conflicting flags are an error."""
    for k in _DATA_KEYS:
        want = (overrides or {}).get(k)
        if want is not None and want != getattr(data_cfg, k):
            raise SystemExit(f"--{k} conflicts with the dataset ({getattr(data_cfg, k)!r})")
    return cfg.with_overrides(**{k: getattr(data_cfg, k) for k in _DATA_KEYS})


def _records(args, overrides):
    from .pipeline import build_dataset, load_dataset

    cfg = _config(args, **{k: v for k, v in overrides.items() if not (args.data and k in _DATA_KEYS)})
    if not args.data:
        return cfg, build_dataset(cfg)
    records, data_cfg = load_dataset(args.data)
    return _with_data(cfg, data_cfg, overrides), records


def cmd_train(args):
    from .pipeline import evaluate, run_training

    cfg, records = _records(args, _train_overrides(args))
    progress = None
    if not args.quiet:
        progress = lambda k, e, v, t: print(f"iter {k:6d}  emd {e:.5f}  val {v:6.2f} dB  test {t:6.2f} dB",
                                            flush=True)
    ckpt, trace = run_training(cfg, records, progress=progress)
    ckpt.extra["config"] = cfg.to_dict()
    out = ckpt.save(args.ckpt_out)
    print(f"selected iteration {ckpt.step} ({ckpt.extra['stop_reason']}); checkpoint in {out}")
    if args.metrics:
        rep = evaluate(ckpt, records, cfg)
        rep.to_csv(args.metrics)
        print(f"test PSNR {rep.mean:.2f} dB vs observation {rep.baseline_mean:.2f} dB")


def _ckpt_config(ckpt):
    from .pipeline import ExperimentConfig

    saved = ckpt.extra.get("config")
    return ExperimentConfig.from_dict(saved) if saved else ExperimentConfig()


def cmd_reconstruct(args):
    from .pipeline import Checkpoint, reconstruct

    ckpt = Checkpoint.load(args.ckpt)
    cfg = _ckpt_config(ckpt)
    g = load_grid_array(args.inp)
    if not isinstance(g, Sinogram):
        raise SystemExit(f"{args.inp} holds a {g.role} array, expected sinogram")
    _write(args.out, reconstruct(ckpt, g, cfg))


def cmd_evaluate(args):
    from .pipeline import Checkpoint, evaluate, load_dataset

    ckpt = Checkpoint.load(args.ckpt)
    records, data_cfg = load_dataset(args.data)
    cfg = _with_data(_ckpt_config(ckpt), data_cfg)
    rep = evaluate(ckpt, records, cfg)
    rep.to_csv(args.out)
    print(f"test PSNR {rep.mean:.2f} +- {rep.std:.2f} dB, observation {rep.baseline_mean:.2f} dB, "
          f"gain {rep.gain:+.2f} dB -> {args.out}")


def plot_trace(trace, path) -> Path:
    """Dual-axis EMD / PSNR curve over iterations."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3.5), dpi=120)
    ax.plot(trace.iterations, trace.emd, color="tab:blue", marker="o", ms=3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("validation EMD", color="tab:blue")
    pts = [(k, p) for k, p in zip(trace.iterations, trace.psnr) if p is not None]
    if pts:
        ax2 = ax.twinx()
        ax2.plot(*zip(*pts), color="tab:red", marker="s", ms=3)
        ax2.set_ylabel("test PSNR (dB)", color="tab:red")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def cmd_plot_trace(args):
    from .otstop import EmdTrace

    src = Path(args.inp)
    trace = EmdTrace.from_csv(src / "trace.csv" if src.is_dir() else src)
    print(f"wrote {plot_trace(trace, args.out)}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polardeblur", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="phantom -> (blurred, noisy) sinogram")
    s.add_argument("--phantom", default="vessel", help="vessel[:seed], bump[:sigma], .patd or image file")
    s.add_argument("--M", type=int, default=64)
    s.add_argument("--kernel", default="Indicator-20", help="kernel name, kernel file or 'none'")
    s.add_argument("--noise", type=float, default=0.0, help="noise level alpha")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--phantom-out", help="also save the phantom")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("invert", help="finite-time FBP of a sinogram")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--M", type=int)
    s.add_argument("--quadrature", choices=("product", "midpoint"), default="product")
    s.set_defaults(func=cmd_invert)

    s = sub.add_parser("polar", help="resample between Cartesian and polar grids")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--direction", choices=("to-polar", "to-cartesian"), required=True)
    s.set_defaults(func=cmd_polar)

    s = sub.add_parser("kernel", help="write a named angular kernel to a text file")
    s.add_argument("--name", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--M", type=int)
    g.add_argument("--N-phi", dest="n_phi", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_kernel)

    def experiment(s):
        s.add_argument("--config", help="JSON or key=value experiment config")
        s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config field")

    s = sub.add_parser("dataset", help="synthesize or ingest a training dataset")
    experiment(s)
    s.add_argument("--M", type=int)
    s.add_argument("--kernel")
    s.add_argument("--noise", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--images", help="image folder instead of synthetic vessels")
    s.add_argument("--previews", type=int, default=3, help="PNG previews for the first N records")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_dataset)

    s = sub.add_parser("train", help="train the deconvolver and select an iterate")
    experiment(s)
    s.add_argument("--loss", choices=("nn2i", "supervised", "ssltv", "dip"))
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--lr", type=float)
    s.add_argument("--batch", type=int)
    s.add_argument("--iters", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--data", help="dataset directory (built on the fly if omitted)")
    s.add_argument("--kernel")
    s.add_argument("--noise", type=float)
    s.add_argument("--stop", choices=("emd", "psnr-oracle", "fixed"))
    s.add_argument("--check-every", type=int)
    s.add_argument("--patience", type=int)
    s.add_argument("--ckpt-out", required=True)
    s.add_argument("--metrics", help="also evaluate on the test split and write CSV here")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("reconstruct", help="C B(P V y) for one sinogram")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("evaluate", help="test-split PSNR against the sharp oracle")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True, help="metrics CSV")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("plot-trace", help="EMD and PSNR over iterations")
    s.add_argument("--in", dest="inp", required=True, help="trace.csv or a checkpoint directory")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot_trace)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"polardeblur {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
