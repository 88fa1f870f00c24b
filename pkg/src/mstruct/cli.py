"""``mstruct`` command line.

Exit codes: 0 success, 2 input error, 3 config/usage error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from mstruct import __version__
from mstruct import descriptors as desc
from mstruct import losses
from mstruct.errors import ConfigError, IoFailure, MstructError
from mstruct.imgquality import SsimParams, volume_quality
from mstruct.physics import (
    PRECONDITIONERS,
    SolverParams,
    effective_diffusion,
    phase_volume_fractions,
    physics_report,
)
from mstruct.report import (
    DESCRIPTOR_KINDS,
    ReportConfig,
    dumps,
    run_report,
    write_porosity,
    write_profile,
    write_quality,
    write_text,
    write_texture,
)
from mstruct.synthgen import VARIANTS, FixtureSpec, generate
from mstruct.texture import GlcmParams, classify_volume
from mstruct.voxcore import Axis, BoundaryMode, Kind, load_volume, require_phase, save_volume


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _triple(text: str, cast=int):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated values, got {text!r}")
    try:
        return tuple(cast(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _floats_file(path: str):
    try:
        with open(path) as fh:
            return [float(line) for line in fh if line.strip()]
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc.strerror}") from exc
    return out


def cmd_info(args) -> int:
    vol = load_volume(args.volume)
    nx, ny, nz = vol.dims
    print(f"dims: {nx} {ny} {nz}")
    print(f"kind: {vol.kind.value}")
    print(f"n_phases: {vol.n_phases if vol.n_phases is not None else '-'}")
    print(f"voxel_size: {vol.voxel_size!r}")
    if vol.kind is Kind.PHASE:
        fracs = phase_volume_fractions(vol)
        print("phase_fractions: " + " ".join(f"{i}={f!r}" for i, f in enumerate(fracs)))
    return 0


def cmd_synth(args) -> int:
    spec = FixtureSpec(
        variant=args.variant,
        dims=args.dims,
        p=args.p,
        axis=Axis.parse(args.axis),
        slab_thickness=args.slab_thickness,
        fraction=args.fraction,
        center=args.center,
        radius=args.radius,
    )
    vol = generate(spec, args.seed)
    save_volume(vol, args.output)
    return 0


def cmd_descriptors(args) -> int:
    bad = set(args.which) - set(DESCRIPTOR_KINDS)
    if bad:
        raise ConfigError(f"unknown descriptors {sorted(bad)}")
    vol = load_volume(args.volume)
    require_phase(vol)
    out = _outdir(args.output)
    boundary = BoundaryMode.parse(args.boundary)
    phases = args.phase if args.phase else list(range(vol.n_phases or 0))
    for ph in phases:
        for d in args.direction:
            if "s2" in args.which:
                write_profile(out, "s2", desc.two_point_correlation(vol, ph, d, args.r_max, boundary))
            if "c2" in args.which:
                prof = desc.two_point_cluster(
                    vol, ph, d, args.r_max, boundary,
                    desc.ClusterVariant(args.cluster_variant), desc.Connectivity(args.connectivity),
                )
                write_profile(out, "c2", prof)
            if "lp" in args.which:
                write_profile(out, "lp", desc.lineal_path(vol, ph, d, args.r_max, boundary))
        if "lpd" in args.which:
            write_porosity(out, desc.local_porosity_cdf(vol, ph, args.window, args.stride))
    return 0


def cmd_texture(args) -> int:
    vol = load_volume(args.volume)
    params = GlcmParams(args.levels, args.distance, tuple(args.angles), not args.asymmetric, True)
    rep = classify_volume(vol, params)
    if args.output:
        write_texture(_outdir(args.output), rep)
    print(f"{'Direction':<10}{'Contrast':>14}{'Homogeneity':>14}{'Energy':>12}{'Entropy':>12}")
    for axis, s in rep.per_axis.items():
        print(f"{axis.name:<10}{s.contrast:>14.3f}{s.homogeneity:>14.3f}{s.energy:>12.3f}{s.entropy:>12.3f}")
    print(f"AI: {rep.ai:.3f}  log10(AI): {rep.log10_ai:.3f}  verdict: {rep.verdict.value}")
    return 0


def cmd_compare(args) -> int:
    ref = load_volume(args.reference)
    gen = load_volume(args.generated)
    params = SsimParams(args.window, args.k1, args.k2, args.dynamic_range)
    rep = volume_quality(ref, gen, params)
    if args.output:
        write_quality(_outdir(args.output), rep)
    for axis, n, s, p in rep.rows():
        print(f"{axis:<8} n={n:<5} ssim={s:.6f} psnr={p:.4f}")
    return 0


def cmd_physics(args) -> int:
    vol = load_volume(args.volume)
    require_phase(vol)
    solver = SolverParams(args.tolerance, args.max_iterations, args.preconditioner)
    out = physics_report(vol, args.boundary).to_dict()
    phases = args.phase if args.phase else list(range(vol.n_phases or 0))
    out["diffusion"] = [
        effective_diffusion(vol, ph, Axis.parse(ax), solver).to_dict()
        for ph in phases
        for ax in args.axis
    ]
    text = dumps(out)
    if args.output:
        write_text(_outdir(args.output) / "physics.json", text)
    sys.stdout.write(text)
    return 0


def cmd_losses(args) -> int:
    real = _floats_file(args.real)
    fake = _floats_file(args.fake)
    out = {
        "wgan_standard": losses.wgan_objective(real, fake, losses.WganConvention.STANDARD),
        "wgan_literal": losses.wgan_objective(real, fake, losses.WganConvention.LITERAL),
    }
    try:
        out["gan"] = losses.gan_objective(real, fake)
    except losses.DomainViolation:
        out["gan"] = None
    conv = losses.WganConvention(args.convention)
    if args.regularization is not None:
        w = out["wgan_standard"] if conv is losses.WganConvention.STANDARD else out["wgan_literal"]
        weights = losses.LossWeights(args.lambda_w, args.lambda_r)
        out["total"] = losses.total_loss(w, args.regularization, weights)
    if args.clip is not None:
        out["clipped_real"] = losses.weight_clip(real, args.clip).tolist()
    sys.stdout.write(dumps(out))
    return 0


def cmd_report(args) -> int:
    if args.config:
        cfg = ReportConfig.from_file(args.config)
        raw = cfg.to_dict()
    else:
        if not args.reference:
            raise ConfigError("report needs --config or --reference")
        raw = {}
    if args.reference:
        raw["reference"] = args.reference
    if args.generated:
        raw["generated"] = args.generated
    if args.output_dir:
        raw["output_dir"] = args.output_dir
    cfg = ReportConfig.from_dict(raw)
    run_report(cfg)
    print(Path(cfg.output_dir) / "report.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mstruct", description="3D microstructure descriptors and reconstruction metrics")
    p.add_argument("--version", action="version", version=f"mstruct {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("info", help="print volume metadata and phase fractions")
    s.add_argument("volume")
    s.set_defaults(func=cmd_info)

    s = sub.add_parser("synth", help="write a synthetic fixture volume")
    s.add_argument("--variant", required=True, choices=VARIANTS)
    s.add_argument("--dims", required=True, type=_triple)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--axis", default="z", choices=["x", "y", "z"])
    s.add_argument("--slab-thickness", type=int, default=1)
    s.add_argument("--fraction", type=float, default=0.25)
    s.add_argument("--center", type=lambda t: _triple(t, float), default=None)
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("descriptors", help="S2, C2, lineal path and local porosity CSVs")
    s.add_argument("volume")
    s.add_argument("--phase", type=int, action="append")
    s.add_argument("--direction", action="append", choices=["x", "y", "z", "avg"])
    s.add_argument("--which", default="s2,c2,lp,lpd", type=lambda t: t.split(","))
    s.add_argument("--r-max", type=int)
    s.add_argument("--boundary", default="truncated", choices=["truncated", "periodic"])
    s.add_argument("--cluster-variant", default="same_cluster", choices=["same_cluster", "literal"])
    s.add_argument("--connectivity", default="face6", choices=["face6", "full26"])
    s.add_argument("--window", type=int)
    s.add_argument("--stride", type=int)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_descriptors)

    s = sub.add_parser("texture", help="GLCM features per axis and the anisotropy index")
    s.add_argument("volume")
    s.add_argument("--levels", type=int)
    s.add_argument("--distance", type=int, default=1)
    s.add_argument("--angles", type=lambda t: [int(a) for a in t.split(",")], default=[0, 45, 90, 135])
    s.add_argument("--asymmetric", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_texture)

    s = sub.add_parser("compare", help="slice-averaged SSIM/PSNR between two volumes")
    s.add_argument("reference")
    s.add_argument("generated")
    s.add_argument("--window", type=int, default=7)
    s.add_argument("--k1", type=float, default=0.01)
    s.add_argument("--k2", type=float, default=0.03)
    s.add_argument("--dynamic-range", type=float, default=255.0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("physics", help="phase fractions, SSA, TPB and effective diffusivity")
    s.add_argument("volume")
    s.add_argument("--boundary", default="truncated", choices=["truncated", "periodic"])
    s.add_argument("--phase", type=int, action="append")
    s.add_argument("--axis", action="append", choices=["x", "y", "z"])
    s.add_argument("--tolerance", type=float, default=1e-8)
    s.add_argument("--max-iterations", type=int)
    s.add_argument("--preconditioner", default="amg", choices=list(PRECONDITIONERS))
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_physics)

    s = sub.add_parser("losses", help="evaluate loss formulas on score files")
    lsub = s.add_subparsers(dest="losses_command", required=True, parser_class=_Parser)
    e = lsub.add_parser("eval", help="GAN/WGAN objectives from critic score files (one value per line)")
    e.add_argument("--real", required=True)
    e.add_argument("--fake", required=True)
    e.add_argument("--convention", default="standard", choices=["standard", "literal"])
    e.add_argument("--regularization", type=float, help="L1 term for the weighted total")
    e.add_argument("--lambda-w", type=float, default=1.0)
    e.add_argument("--lambda-r", type=float, default=1.0)
    e.add_argument("--clip", type=float)
    e.set_defaults(func=cmd_losses)

    s = sub.add_parser("report", help="run a full evaluation report from a JSON config")
    s.add_argument("--config")
    s.add_argument("--reference")
    s.add_argument("--generated")
    s.add_argument("--output-dir")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"mstruct: usage error: {exc}", file=sys.stderr)
        return 3
    for attr, default in (("direction", ["x", "y", "z", "avg"]), ("axis", ["x", "y", "z"])):
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, default)
    try:
        return args.func(args)
    except MstructError as exc:
        print(f"mstruct: error: {exc.name}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
