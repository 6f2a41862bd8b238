"""Scenario configuration, execution, and verification command line.

Config files are flat ``key = value`` text, one setting per line, ``#``
comments allowed.  Keys and defaults::

    scenario            = fig3-direct      # fig3-direct | fourier-2f | custom
    grid.n              = 512              # power of two >= 8
    grid.extent         = 16.0             # fourier-2f defaults to sqrt(2*pi*n)
    k_z                 = 50.0
    f                   = 2.0
    kappa               = 4.0              # pump spot width at the crystal
    detector.shape      = gaussian         # gaussian | tophat | point
    detector.sigma      = 0.1
    detector.width      = 1.0
    detector.x1         = 0.0              # comma list sweeps positions
    mask.kind           = none             # none | slit | double-slit |
                                           # gaussian-aperture | table
    mask.width          = 0.4
    mask.separation     = 2.0
    mask.sigma          = 1.0
    mask.file           =                  # table kind: n rows "re[,im]"
    fresnel_half_factor = false
    output.path         = .
    output.format       = csv
    output.stages       = false

Commands: ``run --config FILE [--out DIR]``, ``verify [--fast]``,
``scenarios``.  Exit codes: 0 success, 1 validation error, 2 dark
conditional, 3 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import hilbert, predict
from .elements import DetectorProfile, FourierLens, Mask, Propagate
from .errors import BiphotonError, ConfigError, DarkConditionalError
from .grid import Field, make_grid
from .retrodict import ImagingSetup, run_retrodictive, sweep_conditioning
from .source import make_biphoton_delta_correlated

__all__ = [
    "ScenarioConfig",
    "parse_config",
    "serialize_config",
    "build_setup",
    "run",
    "verify_report",
    "scenario_descriptions",
    "main",
]

SCENARIOS = ("fig3-direct", "fourier-2f", "custom")
MASK_KINDS = ("none", "slit", "double-slit", "gaussian-aperture", "table")
DETECTOR_SHAPES = ("gaussian", "tophat", "point")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "fig3-direct"
    n: int = 512
    extent: float = 16.0
    k_z: float = 50.0
    f: float = 2.0
    kappa: float = 4.0
    detector_shape: str = "gaussian"
    detector_sigma: float = 0.1
    detector_width: float = 1.0
    detector_x1: tuple = (0.0,)
    mask_kind: str = "none"
    mask_width: float = 0.4
    mask_separation: float = 2.0
    mask_sigma: float = 1.0
    mask_file: str = ""
    fresnel_half_factor: bool = False
    output_path: str = "."
    output_format: str = "csv"
    output_stages: bool = False
    # keys given explicitly in the parsed text (affects scenario defaults)
    explicit: frozenset = field(default_factory=frozenset, compare=False, repr=False)


def _parse_bool(raw: str, line: int) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}", line)


def _parse_float(raw: str, line: int, key: str, positive: bool = False) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}", line) from None
    if not np.isfinite(v):
        raise ConfigError(f"{key}: value must be finite", line)
    if positive and v <= 0:
        raise ConfigError(f"{key}: value must be positive, got {v:g}", line)
    return v


def _parse_choice(raw: str, line: int, key: str, choices) -> str:
    if raw not in choices:
        raise ConfigError(
            f"{key}: expected one of {', '.join(choices)}; got {raw!r}", line
        )
    return raw


def parse_config(text: str) -> ScenarioConfig:
    """Parse flat key = value text into a validated configuration."""
    values: dict = {}
    explicit: set = set()

    for lineno, rawline in enumerate(text.splitlines(), start=1):
        stripped = rawline.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()

        if key == "scenario":
            values["scenario"] = _parse_choice(raw, lineno, key, SCENARIOS)
        elif key == "grid.n":
            try:
                n = int(raw)
            except ValueError:
                raise ConfigError(f"grid.n: expected an integer, got {raw!r}", lineno) from None
            if n < 8 or (n & (n - 1)) != 0:
                raise ConfigError(f"grid.n: must be a power of two >= 8, got {n}", lineno)
            values["n"] = n
        elif key == "grid.extent":
            values["extent"] = _parse_float(raw, lineno, key, positive=True)
        elif key == "k_z":
            values["k_z"] = _parse_float(raw, lineno, key, positive=True)
        elif key == "f":
            values["f"] = _parse_float(raw, lineno, key, positive=True)
        elif key == "kappa":
            values["kappa"] = _parse_float(raw, lineno, key, positive=True)
        elif key == "detector.shape":
            values["detector_shape"] = _parse_choice(raw, lineno, key, DETECTOR_SHAPES)
        elif key == "detector.sigma":
            values["detector_sigma"] = _parse_float(raw, lineno, key, positive=True)
        elif key == "detector.width":
            values["detector_width"] = _parse_float(raw, lineno, key, positive=True)
        elif key == "detector.x1":
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if not parts:
                raise ConfigError("detector.x1: expected at least one position", lineno)
            values["detector_x1"] = tuple(
                _parse_float(p, lineno, key) for p in parts
            )
        elif key == "mask.kind":
            values["mask_kind"] = _parse_choice(raw, lineno, key, MASK_KINDS)
        elif key == "mask.width":
            values["mask_width"] = _parse_float(raw, lineno, key, positive=True)
        elif key == "mask.separation":
            values["mask_separation"] = _parse_float(raw, lineno, key, positive=True)
        elif key == "mask.sigma":
            values["mask_sigma"] = _parse_float(raw, lineno, key, positive=True)
        elif key == "mask.file":
            values["mask_file"] = raw
        elif key == "fresnel_half_factor":
            values["fresnel_half_factor"] = _parse_bool(raw, lineno)
        elif key == "output.path":
            values["output_path"] = raw
        elif key == "output.format":
            values["output_format"] = _parse_choice(raw, lineno, key, ("csv",))
        elif key == "output.stages":
            values["output_stages"] = _parse_bool(raw, lineno)
        else:
            raise ConfigError(f"unknown key {key!r}", lineno)
        explicit.add(key)

    cfg = ScenarioConfig(**values, explicit=frozenset(explicit))
    if cfg.mask_kind == "table" and not cfg.mask_file:
        raise ConfigError("mask.kind = table requires mask.file")
    return cfg


_SERIAL_ORDER = (
    ("scenario", "scenario"),
    ("grid.n", "n"),
    ("grid.extent", "extent"),
    ("k_z", "k_z"),
    ("f", "f"),
    ("kappa", "kappa"),
    ("detector.shape", "detector_shape"),
    ("detector.sigma", "detector_sigma"),
    ("detector.width", "detector_width"),
    ("detector.x1", "detector_x1"),
    ("mask.kind", "mask_kind"),
    ("mask.width", "mask_width"),
    ("mask.separation", "mask_separation"),
    ("mask.sigma", "mask_sigma"),
    ("mask.file", "mask_file"),
    ("fresnel_half_factor", "fresnel_half_factor"),
    ("output.path", "output_path"),
    ("output.format", "output_format"),
    ("output.stages", "output_stages"),
)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Emit a config as text that parses back to an equal configuration."""
    lines = []
    for key, attr in _SERIAL_ORDER:
        v = getattr(cfg, attr)
        if isinstance(v, bool):
            out = "true" if v else "false"
        elif isinstance(v, tuple):
            out = ", ".join(repr(float(p)) for p in v)
        elif isinstance(v, float):
            out = repr(v)
        else:
            out = str(v)
        if key == "mask.file" and not v:
            continue
        lines.append(f"{key} = {out}")
    return "\n".join(lines) + "\n"


def _mask_values(cfg: ScenarioConfig, g) -> np.ndarray | None:
    x = g.x
    if cfg.mask_kind == "none":
        return None
    if cfg.mask_kind == "slit":
        return (np.abs(x) < cfg.mask_width / 2).astype(np.complex128)
    if cfg.mask_kind == "double-slit":
        half = cfg.mask_separation / 2
        open_ = (np.abs(x - half) < cfg.mask_width / 2) | (
            np.abs(x + half) < cfg.mask_width / 2
        )
        return open_.astype(np.complex128)
    if cfg.mask_kind == "gaussian-aperture":
        return np.exp(-(x**2) / (2 * cfg.mask_sigma**2)).astype(np.complex128)
    # table
    rows = []
    try:
        text = Path(cfg.mask_file).read_text()
    except OSError as exc:
        raise ConfigError(f"mask.file: cannot read {cfg.mask_file!r}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            re_part = float(parts[0])
            im_part = float(parts[1]) if len(parts) > 1 else 0.0
        except (ValueError, IndexError):
            raise ConfigError(
                f"mask table: bad row {line!r}", lineno
            ) from None
        rows.append(complex(re_part, im_part))
    if len(rows) != g.n:
        raise ConfigError(
            f"mask table has {len(rows)} rows; grid needs {g.n}"
        )
    t = np.asarray(rows, dtype=np.complex128)
    if np.max(np.abs(t)) > 1 + 1e-12:
        raise ConfigError("mask table values must satisfy |t| <= 1")
    return t


def _default_extent(cfg: ScenarioConfig) -> float:
    # The Fourier-imaging geometry wants a self-conjugate window (dk == dx)
    # so the lens maps wavevector content to position at unit scale.
    if cfg.scenario == "fourier-2f" and "grid.extent" not in cfg.explicit:
        return float(np.sqrt(2 * np.pi * cfg.n))
    return cfg.extent


def build_setup(cfg: ScenarioConfig, x1: float | None = None) -> ImagingSetup:
    """Materialize a configuration into a runnable imaging setup."""
    g = make_grid(cfg.n, _default_extent(cfg))
    tvals = _mask_values(cfg, g)
    mask = (Mask(Field(g, tvals)),) if tvals is not None else ()

    half = cfg.fresnel_half_factor
    if cfg.scenario == "fig3-direct":
        # Backward traversal: focal propagation + lens, then the mask at
        # the crystal.  The crystal plane is read out directly in arm 2.
        arm1 = (Propagate(cfg.f, cfg.k_z, half), FourierLens()) + mask
        arm2 = ()
    elif cfg.scenario == "fourier-2f":
        # Far-field detector in arm 1; arm 2 maps the crystal state's
        # wavevector content to position (unit scale on this window).
        arm1 = (FourierLens(),) + mask
        arm2 = (FourierLens(),)
    else:  # custom: bare conditioning testbed
        arm1 = mask
        arm2 = ()

    source = make_biphoton_delta_correlated(g, kappa=1.0 / cfg.kappa)
    det = DetectorProfile(
        cfg.detector_shape,
        center=float(cfg.detector_x1[0] if x1 is None else x1),
        sigma=cfg.detector_sigma if cfg.detector_shape == "gaussian" else None,
        width=cfg.detector_width if cfg.detector_shape == "tophat" else None,
    )
    return ImagingSetup(grid=g, arm1=arm1, arm2=arm2, source=source, detector1=det)


def _write_csv(path: Path, x: np.ndarray, density: np.ndarray) -> None:
    with path.open("w", newline="") as fh:
        fh.write("x2,probability_density\n")
        for xi, di in zip(x, density):
            fh.write(f"{float(xi)!r},{float(di)!r}\n")


def _stage_entry(name: str, f: Field) -> dict:
    return {
        "name": name,
        "magnitude": np.abs(f.values).tolist(),
        "phase": np.angle(f.values).tolist(),
    }


def _write_stages(path: Path, result) -> None:
    stages = [_stage_entry("alpha", result.alpha)]
    for i, f in enumerate(result.arm1_stages, start=1):
        stages.append(_stage_entry(f"alpha_{i}", f))
    stages.append(_stage_entry("beta_1", result.beta1))
    for i, f in enumerate(result.arm2_stages, start=1):
        stages.append(_stage_entry(f"beta_1_{i}", f))
    stages.append(_stage_entry("beta_2", result.beta2))
    payload = {
        "x": result.beta2.grid.x.tolist(),
        "stages": stages,
        "edge_fractions": result.edge_fractions,
    }
    path.write_text(json.dumps(payload))


def run(cfg: ScenarioConfig, out_dir: str | None = None) -> list[Path]:
    """Execute a configuration and emit CSV (and optional stage) files."""
    out = Path(out_dir if out_dir is not None else cfg.output_path)
    out.mkdir(parents=True, exist_ok=True)
    setup = build_setup(cfg)
    written: list[Path] = []

    if len(cfg.detector_x1) == 1:
        result = run_retrodictive(setup)
        path = out / "conditional.csv"
        _write_csv(path, setup.grid.x, result.distribution.density)
        written.append(path)
        if cfg.output_stages:
            spath = out / "stages.json"
            _write_stages(spath, result)
            written.append(spath)
    else:
        results = sweep_conditioning(setup, cfg.detector_x1)
        for pos, result in zip(cfg.detector_x1, results):
            path = out / f"conditional_x1_{pos:+.4f}.csv"
            _write_csv(path, setup.grid.x, result.distribution.density)
            written.append(path)
            if cfg.output_stages:
                spath = out / f"stages_x1_{pos:+.4f}.json"
                _write_stages(spath, result)
                written.append(spath)
    return written


def scenario_descriptions() -> str:
    return (
        "fig3-direct   focal-plane detector arm backed off through a lens;\n"
        "              mask at the crystal; crystal-plane readout in arm 2.\n"
        "              Point detector + broad pump -> image |t(x)|^2.\n"
        "fourier-2f    far-field detector arm; arm 2 maps wavevector\n"
        "              content to position at unit scale (self-conjugate\n"
        "              window). Point detector -> |FT t|^2.\n"
        "custom        bare conditioning testbed: optional mask in arm 1,\n"
        "              no other optics.\n"
    )


# ---------------------------------------------------------------------------
# verification suite


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""


def _check(name, value, threshold, larger_is_better=False, detail="") -> CheckResult:
    ok = value >= threshold if larger_is_better else value <= threshold
    return CheckResult(name, float(value), float(threshold), bool(ok), detail)


def _equivalence_check(cfg: ScenarioConfig, name: str) -> CheckResult:
    setup = build_setup(cfg)
    retro = run_retrodictive(setup).distribution
    joint = predict.joint_for_setup(setup)
    oracle = predict.conditional_from_joint(joint, setup.detector1.center)
    diff = float(np.max(np.abs(retro.density - oracle.density)))
    return _check(f"equivalence[{name}]", diff, 1e-8)


def _cfg(**kw) -> ScenarioConfig:
    explicit = frozenset(
        key for key, attr in _SERIAL_ORDER if attr in kw
    )
    return ScenarioConfig(**kw, explicit=explicit)


def _restricted_l1(grid, density, reference, halfwidth=3.0) -> float:
    m = np.abs(grid.x) <= halfwidth
    p = density[m] / (density[m].sum() * grid.dx)
    q = reference[m] / (reference[m].sum() * grid.dx)
    return float(np.sum(np.abs(p - q)) * grid.dx)


def _ghost_image_checks() -> list[CheckResult]:
    base = dict(
        scenario="fig3-direct",
        mask_kind="double-slit",
        mask_width=0.4,
        mask_separation=2.0,
        kappa=8.0,
        n=512,
        extent=16.0,
    )
    cfg = _cfg(detector_shape="point", **base)
    setup = build_setup(cfg)
    res = run_retrodictive(setup)
    tsq = np.abs(_mask_values(cfg, setup.grid)) ** 2
    l1 = _restricted_l1(setup.grid, res.distribution.density, tsq)
    out = [_check("ghost-image[point]", l1, 1e-2)]

    # detector-width sweep in units of the mask feature size, finer grid so
    # the narrowest width stays resolvable
    feature = 0.4
    l1s = []
    for s in (0.4 * feature, 0.2 * feature, 0.1 * feature):
        cfg_s = _cfg(detector_shape="gaussian", detector_sigma=s, **{**base, "n": 1024})
        setup_s = build_setup(cfg_s)
        res_s = run_retrodictive(setup_s)
        tsq_s = np.abs(_mask_values(cfg_s, setup_s.grid)) ** 2
        l1s.append(_restricted_l1(setup_s.grid, res_s.distribution.density, tsq_s))
    worst_step = max(b - a for a, b in zip(l1s, l1s[1:]))
    out.append(
        _check(
            "ghost-image[sigma-sweep-monotone]",
            worst_step,
            0.0,
            detail="L1 = " + ", ".join(f"{v:.4f}" for v in l1s),
        )
    )
    return out


def _fourier_image_check() -> CheckResult:
    cfg = _cfg(
        scenario="fourier-2f",
        detector_shape="point",
        mask_kind="slit",
        mask_width=0.8,
        n=512,
    )
    setup = build_setup(cfg)
    res = run_retrodictive(setup)
    g = setup.grid
    t = _mask_values(cfg, g)
    # direct quadrature of the unit-scale transform, independent of the FFT path
    kernel = np.exp(-1j * np.outer(g.x, g.x)) * (g.dx / np.sqrt(2 * np.pi))
    ref = np.abs(kernel @ t) ** 2
    ref /= ref.sum() * g.dx
    l1 = float(np.sum(np.abs(res.distribution.density - ref)) * g.dx)
    return _check("fourier-image[point]", l1, 1e-2)


def _focal_closed_form_check() -> CheckResult:
    from .elements import apply_chain_backward, materialize_detector

    g = make_grid(1024, 32.0)
    f, k_z, x1 = 2.0, 50.0, 0.5
    worst = 0.0
    for sigma in (0.5, 1.0, 2.0):
        det = materialize_detector(
            DetectorProfile("gaussian", center=x1, sigma=sigma), g
        )
        out = apply_chain_backward((Propagate(f, k_z), FourierLens()), det)
        gfac = 1 - 2j * f / (k_z * sigma**2)
        ref = (
            (1 / (np.pi * sigma**2)) ** 0.25
            / np.sqrt(gfac)
            * np.exp(-((g.x - x1) ** 2) / (2 * sigma**2 * gfac))
        )
        i0 = int(np.argmax(np.abs(ref)))
        phase = ref[i0] / out.values[i0]
        phase /= abs(phase)
        err = float(np.max(np.abs(out.values * phase - ref)) / np.max(np.abs(ref)))
        worst = max(worst, err)
    return _check("focal-closed-form[sigma 0.5,1,2]", worst, 1e-6)


def _washout_checks() -> list[CheckResult]:
    # Narrow detector on the scenario's own grid.
    cfg_n = _cfg(
        scenario="fig3-direct",
        mask_kind="double-slit",
        detector_shape="gaussian",
        detector_sigma=0.1,
        n=512,
        extent=16.0,
    )
    mi_n = predict.mutual_information_bits(
        predict.joint_for_setup(build_setup(cfg_n)), bins=64
    )
    # Broad detector, sigma = L/4.  The broad-detector regime needs
    # window >> detector >> mask, so it runs on an enlarged window.
    L = 64.0
    cfg_b = _cfg(
        scenario="fig3-direct",
        mask_kind="double-slit",
        detector_shape="gaussian",
        detector_sigma=L / 4,
        n=1024,
        extent=L,
    )
    mi_b = predict.mutual_information_bits(
        predict.joint_for_setup(build_setup(cfg_b)), bins=64
    )
    return [
        _check("washout[MI, sigma=0.1]", mi_n, 0.5, larger_is_better=True),
        _check("washout[MI, sigma=L/4]", mi_b, 0.01),
    ]


def _finite_dim_check(instances: int = 100) -> CheckResult:
    rng = np.random.default_rng(20240811)
    worst = 0.0
    for trial in range(instances):
        dim = int(rng.integers(2, 7))
        members = int(rng.integers(2, dim + 2))
        outcomes = int(rng.integers(2, dim + 1))
        ens = hilbert.random_ensemble(dim, members, rng)
        pom = hilbert.random_pom(dim, outcomes, rng)
        u = hilbert.random_unitary(dim, rng)
        fwd = np.stack(
            [hilbert.predictive_conditional(s, pom, u) for s in ens.states],
            axis=1,
        )
        back = hilbert.bayes_invert(ens.priors, fwd)
        for j in range(outcomes):
            direct = hilbert.retrodictive_conditional(ens, pom, j, u)
            worst = max(worst, float(np.max(np.abs(direct - back[:, j]))))
    return _check(f"finite-dim-equivalence[{instances} instances]", worst, 1e-12)


def verify_report(fast: bool = False) -> list[CheckResult]:
    """Run the verification suite and return one result per check."""
    checks: list[CheckResult] = []
    # n = 256 keeps the dense oracle cheap; the detector width is bumped to
    # stay resolvable at that grid (equivalence is detector-independent).
    n_eq, sigma_eq = 256, 0.2
    checks.append(
        _equivalence_check(
            _cfg(scenario="fig3-direct", n=n_eq, extent=16.0, detector_sigma=sigma_eq),
            "fig3-direct/no-mask",
        )
    )
    checks.append(
        _equivalence_check(
            _cfg(
                scenario="fig3-direct",
                mask_kind="double-slit",
                n=n_eq,
                extent=16.0,
                detector_sigma=sigma_eq,
            ),
            "fig3-direct/double-slit",
        )
    )
    checks.append(
        _equivalence_check(
            _cfg(
                scenario="fourier-2f",
                mask_kind="slit",
                mask_width=0.8,
                detector_shape="point",
                n=n_eq,
            ),
            "fourier-2f/single-slit",
        )
    )
    checks.append(_finite_dim_check(30 if fast else 100))
    if not fast:
        checks.extend(_ghost_image_checks())
        checks.append(_fourier_image_check())
        checks.append(_focal_closed_form_check())
        checks.extend(_washout_checks())
    return checks


def _print_report(checks: list[CheckResult]) -> bool:
    ok = True
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        rel = ">=" if c.name.startswith("washout[MI, sigma=0.1") else "<="
        line = f"{status}  {c.name}: {c.value:.3e} (threshold {rel} {c.threshold:g})"
        if c.detail:
            line += f"  [{c.detail}]"
        print(line)
        ok = ok and c.passed
    return ok


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="biphoton", description="two-photon conditional imaging simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("--config", required=True, help="path to a config file")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_ver = sub.add_parser("verify", help="run the verification suite")
    p_ver.add_argument("--fast", action="store_true", help="equivalence checks only")
    sub.add_parser("scenarios", help="list built-in scenarios")

    args = parser.parse_args(argv)
    if args.command == "scenarios":
        print(scenario_descriptions(), end="")
        return 0
    if args.command == "verify":
        t0 = time.perf_counter()
        ok = _print_report(verify_report(fast=args.fast))
        print(f"verify {'passed' if ok else 'FAILED'} in {time.perf_counter() - t0:.1f} s")
        return 0 if ok else 3
    # run
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(text)
        written = run(cfg, out_dir=args.out)
    except DarkConditionalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BiphotonError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
