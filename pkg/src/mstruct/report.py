"""Dataset-level evaluation reports and their CSV/JSON artifacts."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from mstruct import __version__
from mstruct import descriptors as desc
from mstruct.errors import BadSpec, ConfigError, IoFailure
from mstruct.imgquality import SsimParams, volume_quality
from mstruct.physics import SolverParams, effective_diffusion, physics_report
from mstruct.texture import FEATURE_NAMES, GlcmParams, classify_volume
from mstruct.voxcore import Axis, BoundaryMode, Kind, VoxelVolume, load_volume

REPORT_SCHEMA = 1
DESCRIPTOR_KINDS = ("s2", "c2", "lp", "lpd")
PHYSICS_KINDS = ("fractions", "ssa", "tpb", "diffusion")
DIRECTIONS = ("x", "y", "z", "avg")


def _take(section: str, raw: dict, allowed) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config section {section!r} must be an object")
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return raw


@dataclass
class DescriptorConfig:
    enabled: list = field(default_factory=lambda: list(DESCRIPTOR_KINDS))
    phases: list | None = None
    directions: list = field(default_factory=lambda: list(DIRECTIONS))
    r_max: int | None = None
    boundary: str = "truncated"
    cluster_variant: str = "same_cluster"
    connectivity: str = "face6"
    window: int | None = None
    stride: int | None = None


@dataclass
class TextureConfig:
    enabled: bool = True
    levels: int | None = None
    distance: int = 1
    angles: list = field(default_factory=lambda: [0, 45, 90, 135])
    symmetric: bool = True
    normalized: bool = True

    def params(self) -> GlcmParams:
        return GlcmParams(self.levels, self.distance, tuple(self.angles), self.symmetric, self.normalized)


@dataclass
class QualityConfig:
    enabled: bool = True
    window: int = 7
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def params(self) -> SsimParams:
        return SsimParams(self.window, self.k1, self.k2, self.dynamic_range)


@dataclass
class PhysicsConfig:
    enabled: list = field(default_factory=lambda: list(PHYSICS_KINDS))
    boundary: str = "truncated"
    phases: list | None = None
    axes: list = field(default_factory=lambda: ["x", "y", "z"])
    tolerance: float = 1e-8
    max_iterations: int | None = None
    preconditioner: str = "amg"

    def solver(self) -> SolverParams:
        return SolverParams(self.tolerance, self.max_iterations, self.preconditioner)


def _section(cls, name, raw):
    raw = _take(name, raw, [f.name for f in fields(cls)])
    return cls(**raw)


@dataclass
class ReportConfig:
    reference: str
    generated: str | None = None
    output_dir: str = "report"
    descriptors: DescriptorConfig = field(default_factory=DescriptorConfig)
    texture: TextureConfig = field(default_factory=TextureConfig)
    quality: QualityConfig = field(default_factory=QualityConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)

    @classmethod
    def from_dict(cls, raw: dict) -> "ReportConfig":
        raw = _take("config", raw, [f.name for f in fields(cls)])
        if not raw.get("reference"):
            raise ConfigError("config needs a 'reference' volume path")
        cfg = cls(
            reference=str(raw["reference"]),
            generated=None if raw.get("generated") is None else str(raw["generated"]),
            output_dir=str(raw.get("output_dir", "report")),
            descriptors=_section(DescriptorConfig, "descriptors", raw.get("descriptors")),
            texture=_section(TextureConfig, "texture", raw.get("texture")),
            quality=_section(QualityConfig, "quality", raw.get("quality")),
            physics=_section(PhysicsConfig, "physics", raw.get("physics")),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ReportConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def comparing(self) -> bool:
        return self.generated is not None and self.quality.enabled

    def validate(self) -> None:
        d, p = self.descriptors, self.physics
        bad = set(d.enabled) - set(DESCRIPTOR_KINDS)
        if bad:
            raise ConfigError(f"unknown descriptors {sorted(bad)}")
        bad = set(d.directions) - set(DIRECTIONS)
        if bad:
            raise ConfigError(f"unknown directions {sorted(bad)}")
        bad = set(p.enabled) - set(PHYSICS_KINDS)
        if bad:
            raise ConfigError(f"unknown physics analyses {sorted(bad)}")
        bad = set(a.lower() for a in p.axes) - {"x", "y", "z"}
        if bad:
            raise ConfigError(f"unknown axes {sorted(bad)}")
        if not (d.enabled or self.texture.enabled or p.enabled or self.comparing()):
            raise ConfigError("no analysis enabled")
        if self.generated is not None and os.path.abspath(self.generated) == os.path.abspath(self.reference):
            raise ConfigError("reference and generated paths must differ")
        try:
            BoundaryMode.parse(d.boundary)
            BoundaryMode.parse(p.boundary)
            desc.ClusterVariant(d.cluster_variant)
            desc.Connectivity(d.connectivity)
            self.texture.params()
            self.quality.params()
            p.solver()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        def sec(obj):
            return {f.name: getattr(obj, f.name) for f in fields(obj)}

        return {
            "reference": self.reference,
            "generated": self.generated,
            "output_dir": self.output_dir,
            "descriptors": sec(self.descriptors),
            "texture": sec(self.texture),
            "quality": sec(self.quality),
            "physics": sec(self.physics),
        }


def jsonable(obj):
    """Replace non-finite floats with the string sentinels 'inf', '-inf', 'nan'."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"


def fmt(value) -> str:
    """CSV cell text; floats use the shortest round-trip repr ('inf' for +inf)."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror}") from exc


def write_text(path: Path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror}") from exc


def profile_filename(kind: str, profile: desc.RadialProfile) -> str:
    return f"{kind}_phase{profile.phase}_{profile.direction_name}.csv"


def write_profile(outdir: Path, kind: str, profile: desc.RadialProfile) -> Path:
    path = outdir / profile_filename(kind, profile)
    write_csv(path, ("r", "value", "n_samples"), profile.rows())
    return path


def write_porosity(outdir: Path, cdf: desc.PorosityCdf) -> Path:
    path = outdir / f"lpd_phase{cdf.phase}.csv"
    write_csv(path, ("porosity", "cumulative_fraction"), cdf.points)
    return path


def write_texture(outdir: Path, report) -> list[Path]:
    rows = [(a.name, *(float(v) for v in s.as_tuple())) for a, s in report.per_axis.items()]
    tex = outdir / "texture.csv"
    write_csv(tex, ("Direction", "Contrast", "Homogeneity", "Energy", "Entropy"), rows)
    ai = outdir / "anisotropy.csv"
    write_csv(
        ai,
        ("ai", "log10_ai", *(f"sigma_{n}" for n in FEATURE_NAMES), "verdict"),
        [(report.ai, report.log10_ai, *report.sigmas, report.verdict.value)],
    )
    return [tex, ai]


def write_quality(outdir: Path, report) -> Path:
    path = outdir / "quality.csv"
    write_csv(path, ("axis", "n_slices", "mean_ssim", "mean_psnr"), report.rows())
    return path


@dataclass
class EvaluationReport:
    volume: dict
    config: dict
    anisotropy: object = None
    profiles: dict = field(default_factory=dict)  # (kind, phase, direction) -> RadialProfile
    porosity: dict = field(default_factory=dict)  # phase -> PorosityCdf
    physics: object = None
    diffusion: list = field(default_factory=list)
    quality: object = None
    version: str = __version__

    def to_dict(self) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "version": self.version,
            "volume": self.volume,
            "config": self.config,
        }
        if self.anisotropy is not None:
            out["anisotropy"] = self.anisotropy.to_dict()
        if self.profiles:
            out["profiles"] = {
                f"{k}_phase{ph}_{d}": p.to_dict() for (k, ph, d), p in self.profiles.items()
            }
        if self.porosity:
            out["local_porosity"] = {f"phase{ph}": c.to_dict() for ph, c in self.porosity.items()}
        if self.physics is not None:
            out["physics"] = self.physics
        if self.diffusion:
            out["diffusion"] = [r.to_dict() for r in self.diffusion]
        if self.quality is not None:
            out["quality"] = self.quality.to_dict()
        return jsonable(out)

    def to_json(self) -> str:
        return dumps(self.to_dict())


def volume_metadata(vol: VoxelVolume, path=None) -> dict:
    meta = {"dims": list(vol.dims), "kind": vol.kind.value, "n_phases": vol.n_phases, "voxel_size": vol.voxel_size}
    if path is not None:
        meta["path"] = str(path)
    return meta


def worker_count() -> int:
    """Worker cap from MSTRUCT_THREADS (0 or unset means one per CPU)."""
    raw = os.environ.get("MSTRUCT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"MSTRUCT_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("MSTRUCT_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _descriptor_tasks(vol: VoxelVolume, cfg: DescriptorConfig):
    phases = cfg.phases if cfg.phases is not None else list(range(vol.n_phases))
    boundary = BoundaryMode.parse(cfg.boundary)
    tasks = []
    for ph in phases:
        for d in cfg.directions:
            if "s2" in cfg.enabled:
                tasks.append((("s2", ph, d), desc.two_point_correlation, (vol, ph, d, cfg.r_max, boundary), {}))
            if "c2" in cfg.enabled:
                tasks.append((
                    ("c2", ph, d),
                    desc.two_point_cluster,
                    (vol, ph, d, cfg.r_max, boundary),
                    {"variant": desc.ClusterVariant(cfg.cluster_variant), "connectivity": desc.Connectivity(cfg.connectivity)},
                ))
            if "lp" in cfg.enabled:
                tasks.append((("lp", ph, d), desc.lineal_path, (vol, ph, d, cfg.r_max, boundary), {}))
        if "lpd" in cfg.enabled:
            tasks.append((("lpd", ph, None), desc.local_porosity_cdf, (vol, ph, cfg.window, cfg.stride), {}))
    return tasks


def run_report(cfg: ReportConfig, write: bool = True) -> EvaluationReport:
    """Run every enabled analysis and (optionally) write report.json and CSVs.

    Analyses run on a thread pool capped by MSTRUCT_THREADS; results are
    gathered and written in a fixed order so the output does not depend on
    scheduling.
    """
    ref = load_volume(cfg.reference)
    gen = load_volume(cfg.generated) if cfg.comparing() else None

    tasks = []
    if cfg.descriptors.enabled:
        tasks += _descriptor_tasks(ref, cfg.descriptors)
    if cfg.texture.enabled:
        tasks.append((("texture",), classify_volume, (ref, cfg.texture.params()), {}))
    phys = cfg.physics
    basic = [k for k in phys.enabled if k != "diffusion"]
    if basic:
        tasks.append((("physics",), physics_report, (ref, phys.boundary), {}))
    if "diffusion" in phys.enabled:
        phases = phys.phases if phys.phases is not None else list(range(ref.n_phases or 0))
        for ph in phases:
            for ax in phys.axes:
                tasks.append((("diffusion", ph, ax), effective_diffusion, (ref, ph, Axis.parse(ax), phys.solver()), {}))
    if gen is not None:
        tasks.append((("quality",), volume_quality, (ref, gen, cfg.quality.params()), {}))

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = [(key, pool.submit(fn, *args, **kw)) for key, fn, args, kw in tasks]
        results = [(key, fut.result()) for key, fut in futures]

    report = EvaluationReport(
        volume=volume_metadata(ref, cfg.reference),
        config=cfg.to_dict(),
    )
    for key, res in results:
        kind = key[0]
        if kind in ("s2", "c2", "lp"):
            report.profiles[(kind, key[1], res.direction_name)] = res
        elif kind == "lpd":
            report.porosity[key[1]] = res
        elif kind == "texture":
            report.anisotropy = res
        elif kind == "physics":
            full = res.to_dict()
            keep = {"boundary": full["boundary"]}
            if "fractions" in basic:
                keep["phase_fractions"] = full["phase_fractions"]
            if "ssa" in basic:
                keep["ssa"] = full["ssa"]
            if "tpb" in basic:
                keep["tpb_density"] = full["tpb_density"]
            report.physics = keep
        elif kind == "diffusion":
            report.diffusion.append(res)
        elif kind == "quality":
            report.quality = res

    if write:
        write_report(report, Path(cfg.output_dir))
    return report


def write_report(report: EvaluationReport, outdir: Path) -> list[Path]:
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {outdir}: {exc.strerror}") from exc
    written = []
    for (kind, _, _), prof in report.profiles.items():
        written.append(write_profile(outdir, kind, prof))
    for cdf in report.porosity.values():
        written.append(write_porosity(outdir, cdf))
    if report.anisotropy is not None:
        written += write_texture(outdir, report.anisotropy)
    if report.quality is not None:
        written.append(write_quality(outdir, report.quality))
    path = outdir / "report.json"
    write_text(path, report.to_json())
    written.append(path)
    return written
