"""Command-line frontend.

Subcommands: kernel | acf | simulate | mzlab | split | oscillator | ingest.
Every run writes delimited series, a JSON verification report and (unless
--no-plot) matplotlib figures into the output directory.  Runs with the
same seed are bit-reproducible for any MZ_WORKBENCH_THREADS value; the
exit code is 0 exactly when every check in the report passes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import scipy.linalg

from . import glesim, io, mori, phaselab, spectral, volterra
from .errors import GridMismatchError, WorkbenchError
from .hilbert import Generator, make_skew_generator
from .report import Tolerances, VerificationReport
from .series import ScalarSeries, TimeGrid
from .threads import worker_count

DEFAULT_TOLERANCES = {
    "drift_zero": 1e-12,
    "orthogonality": 1e-10,
    "stationarity": 1e-10,
    "second_fdt": 1e-10,
    "noise_unitarity": 1e-10,
    "gle_residual_scale": 100.0,
    "volterra_agreement_scale": 100.0,
    "round_trip_scale": 100.0,
    "acf_band": 1.0,
    "equivalence_band": 1.0,
    "two_sample_alpha": 0.01,
    "split_bound_slack": 1e-10,
    "coupling_vanish": 1e-10,
    "fast_reduction": 1e-9,
    "unboundedness": 1e-8,
    "xn_norm": 1e-10,
    "kernel_flat_scale": 5.0,
}


def _add_global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # global flags are accepted both before and after the subcommand; the
    # suppressed copies keep subparsers from clobbering values parsed early
    d = argparse.SUPPRESS if suppress else None
    kw = {"default": d} if suppress else {}
    parser.add_argument("--seed", type=int, help="master seed (64-bit unsigned)", **kw)
    parser.add_argument("--out", type=Path, help="output directory", **kw)
    parser.add_argument("--dt", type=float, help="grid step", **kw)
    parser.add_argument("--steps", type=int, help="grid step count", **kw)
    parser.add_argument(
        "--tol", action="append", metavar="NAME=VAL",
        help="override a named tolerance (repeatable)", **kw,
    )
    parser.add_argument("--strict", action="store_true",
                        help="halve all default tolerances", **kw)
    parser.add_argument(
        "--format", choices=("csv", "json", "bin"),
        help="ensemble dump format (csv table, raw binary + sidecar, or report-only json)", **kw,
    )
    parser.add_argument("--no-plot", action="store_true", help="skip figure rendering", **kw)
    parser.add_argument(
        "--threads", type=int,
        help="worker threads (capped by MZ_WORKBENCH_THREADS; never affects results)", **kw,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzw",
        description="Memory-kernel and projection workbench on finite-dimensional model spaces",
    )
    _add_global_options(parser, suppress=False)
    parser.set_defaults(
        seed=0, out=Path("."), dt=None, steps=None, tol=None, strict=False,
        format="csv", no_plot=False, threads=None,
    )
    common = argparse.ArgumentParser(add_help=False)
    _add_global_options(common, suppress=True)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("kernel", help="extract a memory kernel from an autocorrelation file")
    p.add_argument("--acf", type=Path, required=True, help="input acf CSV (t,value)")
    p.add_argument("--t-col", default="t")
    p.add_argument("--value-col", default="value")

    p = add_parser("acf", help="reconstruct an autocorrelation from a kernel file")
    p.add_argument("--kernel", type=Path, required=True, help="input kernel CSV (t,value)")
    p.add_argument("--c0", type=float, default=1.0, help="initial autocorrelation value")
    p.add_argument("--t-col", default="t")
    p.add_argument("--value-col", default="value")

    p = add_parser("simulate", help="coarse-grained Gaussian ensembles from an acf")
    p.add_argument("--acf", type=Path, required=True)
    p.add_argument("--method", choices=("gle", "direct", "spectral", "all"), default="direct")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--t-col", default="t")
    p.add_argument("--value-col", default="value")

    p = add_parser("mzlab", help="projection/kernel identity suite for a generator")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--generator", type=Path, help="generator JSON file")
    src.add_argument("--random", type=int, metavar="DIM", help="seeded random generator")
    p.add_argument(
        "--z", default="e1",
        help="observable: e1 | ones | random | comma-separated components",
    )

    p = add_parser("split", help="fast/slow spectral splitting report")
    p.add_argument("--generator", type=Path, required=True)
    p.add_argument("--omega", type=float, required=True, help="cutoff frequency")

    p = add_parser("oscillator", help="phase-space laboratory demos")
    p.add_argument("--demo", choices=("unboundedness", "acf"), required=True)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--nodes", type=int, default=64, help="quadrature nodes per axis")
    p.add_argument("--samples", type=int, default=10000)

    p = add_parser("ingest", help="turn a trajectory table into an acf file")
    p.add_argument("--trajectories", type=Path, required=True)
    p.add_argument("--t-col", default="t")

    return parser


def _tolerances(args) -> Tolerances:
    overrides = {}
    for item in args.tol or []:
        name, _, value = item.partition("=")
        if not value:
            raise WorkbenchError(f"--tol expects NAME=VAL, got {item!r}")
        if name not in DEFAULT_TOLERANCES:
            raise WorkbenchError(f"unknown tolerance {name!r}; known: {sorted(DEFAULT_TOLERANCES)}")
        overrides[name] = float(value)
    return Tolerances(defaults=dict(DEFAULT_TOLERANCES), strict=args.strict, overrides=overrides)


def _grid(args) -> TimeGrid:
    dt = args.dt if args.dt is not None else 0.01
    steps = args.steps if args.steps is not None else 500
    if steps < 1:
        raise WorkbenchError(f"--steps must be >= 1, got {steps}")
    return TimeGrid(dt, steps)


def _check_grid_flags(args, grid: TimeGrid, path: Path) -> None:
    """Reject --dt/--steps values conflicting with the grid of an input file."""
    if args.dt is not None and abs(args.dt - grid.dt) > 1e-9 * max(grid.dt, args.dt):
        raise GridMismatchError(
            f"--dt {args.dt} conflicts with the grid dt {grid.dt} of {path}"
        )
    if args.steps is not None and args.steps != grid.n_steps:
        raise GridMismatchError(
            f"--steps {args.steps} conflicts with the {grid.n_steps} steps of {path}"
        )


def _parse_observable(spec: str, generator: Generator, seed: int) -> np.ndarray:
    dim = generator.dim
    if spec == "e1":
        z = np.zeros(dim)
        z[0] = 1.0
        return z
    if spec == "ones":
        return np.ones(dim)
    if spec == "random":
        return np.random.default_rng([seed, 1]).standard_normal(dim)
    try:
        z = np.asarray([float(c) for c in spec.split(",")], dtype=float)
    except ValueError as exc:
        raise WorkbenchError(f"cannot parse observable spec {spec!r}") from exc
    return generator.space.check_vector(z)


def _load_generator(args) -> Generator:
    if getattr(args, "generator", None) is not None:
        return io.read_generator(args.generator)
    return make_skew_generator(dim=args.random, seed=args.seed)


def cmd_kernel(args, tol: Tolerances, outdir: Path, plot: bool) -> VerificationReport:
    acf = io.read_series(args.acf, t_col=args.t_col, value_col=args.value_col)
    _check_grid_flags(args, acf.grid, args.acf)
    kernel = volterra.kernel_from_acf(acf)
    io.write_series(outdir / "kernel.csv", kernel, value_name="kernel")
    round_trip = volterra.acf_from_kernel(kernel, float(acf.values[0]))
    deviation = float(np.max(np.abs(round_trip.values - acf.values)))
    report = VerificationReport(
        "kernel extraction",
        config={"dt": acf.grid.dt, "n_steps": acf.grid.n_steps, "input": args.acf.name},
    )
    scale = tol.get("round_trip_scale") * acf.grid.dt**2 * max(abs(acf.values[0]), 1e-300)
    report.add(
        "round_trip",
        "kernel-to-acf inversion reproduces the input at the grid order",
        deviation,
        scale,
    )
    if plot:
        from . import plotting

        plotting.plot_series(outdir / "kernel.png", kernel, title="extracted memory kernel",
                             ylabel="kernel")
        plotting.plot_series_pair(
            outdir / "kernel_round_trip.png", acf, round_trip,
            labels=("input acf", "round trip"), title="round-trip consistency",
            ylabel="autocorrelation",
        )
    return report


def cmd_acf(args, tol: Tolerances, outdir: Path, plot: bool) -> VerificationReport:
    kernel = io.read_series(args.kernel, t_col=args.t_col, value_col=args.value_col)
    _check_grid_flags(args, kernel.grid, args.kernel)
    acf = volterra.acf_from_kernel(kernel, args.c0)
    io.write_series(outdir / "acf.csv", acf, value_name="value")
    report = VerificationReport(
        "autocorrelation reconstruction",
        config={"dt": kernel.grid.dt, "n_steps": kernel.grid.n_steps, "c0": args.c0,
                "input": args.kernel.name},
    )
    if args.c0 != 0.0:
        back = volterra.kernel_from_acf(acf)
        deviation = float(np.max(np.abs(back.values - kernel.values)))
        scale = tol.get("round_trip_scale") * kernel.grid.dt**2 * max(
            1.0, float(np.max(np.abs(kernel.values)))
        )
        report.add(
            "round_trip",
            "acf-to-kernel inversion reproduces the input at the grid order",
            deviation,
            scale,
        )
    if plot:
        from . import plotting

        plotting.plot_series(outdir / "acf.png", acf, title="reconstructed autocorrelation",
                             ylabel="autocorrelation")
    return report


def _dump_ensemble(outdir: Path, name: str, ensemble, fmt: str) -> None:
    if fmt == "csv":
        io.write_ensemble_csv(outdir / f"{name}.csv", ensemble)
    elif fmt == "bin":
        io.write_ensemble_binary(outdir / f"{name}.bin", ensemble)
    # fmt == "json": report/acf files only, no bulk dump


def cmd_simulate(args, tol: Tolerances, outdir: Path, plot: bool) -> VerificationReport:
    acf = io.read_series(args.acf, t_col=args.t_col, value_col=args.value_col)
    _check_grid_flags(args, acf.grid, args.acf)
    grid = acf.grid
    methods = ("gle", "direct", "spectral") if args.method == "all" else (args.method,)
    report = VerificationReport(
        "coarse-grained simulation",
        config={
            "dt": grid.dt, "n_steps": grid.n_steps, "samples": args.samples,
            "seed": args.seed, "method": args.method,
        },
    )
    ensembles = {}
    estimates = {}
    for method in methods:
        ens = glesim.coarse_grained_ensemble(
            acf, args.samples, args.seed, method=method, workers=args.threads
        )
        ensembles[method] = ens
        _dump_ensemble(outdir, f"ensemble_{method}", ens, args.format)
        est, se = glesim.empirical_acf(ens)
        estimates[method] = (est, se)
        io.write_series(outdir / f"acf_{method}.csv", est, value_name="acf_estimate")
        slack = 5.0 * grid.dt**2 * abs(acf.values[0]) if method == "gle" else 0.0
        band = 3.0 * se.values + slack
        band = np.where(band == 0.0, np.inf, band)
        measured = float(np.max(np.abs(est.values - acf.values) / band))
        report.add(
            f"acf_band_{method}",
            "empirical autocorrelation stays inside its 3 SE band around the target",
            measured,
            tol.get("acf_band"),
        )
    if args.method == "all":
        gle_est, gle_se = estimates["gle"]
        dir_est, dir_se = estimates["direct"]
        combined = 3.0 * np.sqrt(gle_se.values**2 + dir_se.values**2)
        band = combined + 5.0 * grid.dt**2 * abs(acf.values[0])
        measured = float(np.max(np.abs(gle_est.values - dir_est.values) / band))
        report.add(
            "gle_direct_equivalence",
            "kernel-integrated and directly sampled ensembles share one path law",
            measured,
            tol.get("equivalence_band"),
        )
        alpha = tol.get("two_sample_alpha")
        passed, max_z, threshold = glesim.two_sample_lag_test(
            ensembles["spectral"], ensembles["direct"], alpha=alpha
        )
        record = report.add(
            "spectral_direct_two_sample",
            "circulant sampler matches direct sampling in a per-lag z test",
            max_z,
            threshold,
        )
        record.passed = passed
    if plot:
        from . import plotting

        plotting.plot_acf_bands(
            outdir / "simulate_acf.png", acf, estimates,
            title=f"empirical autocorrelation, M={args.samples}",
        )
    return report


def cmd_mzlab(args, tol: Tolerances, outdir: Path, plot: bool) -> VerificationReport:
    generator = _load_generator(args)
    grid = _grid(args)
    z = _parse_observable(args.z, generator, args.seed)
    dec = mori.mori_decomposition(generator, z, grid)
    io.write_series(outdir / "kernel.csv", dec.kernel, value_name="kernel")
    io.write_series(outdir / "residual.csv", dec.residual, value_name="residual")
    io.write_json(outdir / "decomposition.json", dec.to_payload())

    space = generator.space
    w = space.weight_vector
    znorm = float(np.sqrt((z * w) @ z))
    eta = dec.eta
    eta_norms = dec.eta_norms
    eta0_norm = eta_norms[0]
    report = VerificationReport(
        "projection identity suite",
        config={
            "dim": generator.dim, "dt": grid.dt, "n_steps": grid.n_steps,
            "seed": args.seed, "z": args.z,
        },
    )

    report.add("drift_zero", "drift coefficient vanishes for a skew generator on a real space",
               abs(dec.omega), tol.get("drift_zero"))

    overlaps = np.abs(eta @ (w * z))
    denom = np.maximum(eta_norms * znorm, 1e-300)
    report.add("orthogonality", "fluctuating force stays orthogonal to the observable",
               float(np.max(overlaps / denom)), tol.get("orthogonality"))

    gram = eta @ (eta * w).T
    stat_dev = float(np.max(np.abs(gram - scipy.linalg.toeplitz(gram[0]))))
    report.add("stationarity", "noise correlations depend only on the time difference",
               stat_dev / max(eta0_norm**2, 1e-300), tol.get("stationarity"))

    zz = float((z * w) @ z)
    fdt_dev = float(np.max(np.abs(dec.kernel.values + gram[0] / zz)))
    report.add("second_fdt", "kernel equals minus the noise autocorrelation over (z,z)",
               fdt_dev / max(abs(dec.kernel.values[0]), 1e-300), tol.get("second_fdt"))

    unit_dev = float(np.max(np.abs(eta_norms - eta0_norm)))
    report.add("noise_unitarity", "orthogonal dynamics preserves the norm on the complement of z",
               unit_dev / max(eta0_norm, 1e-300), tol.get("noise_unitarity"))

    resid_tol = tol.get("gle_residual_scale") * grid.dt**2 * max(eta0_norm, 1e-300)
    report.add("gle_residual", "evolution equals drift + memory convolution + noise",
               float(np.max(dec.residual.values)), resid_tol)

    kernel_volterra = mori.kernel_via_2fdt_volterra(generator, z, grid)
    agreement = float(np.max(np.abs(kernel_volterra.values - dec.kernel.values)))
    agree_tol = tol.get("volterra_agreement_scale") * grid.dt**2 * max(
        1.0, abs(dec.kernel.values[0])
    )
    report.add("volterra_uniqueness", "scalar Volterra route recovers the same kernel",
               agreement, agree_tol)

    if plot:
        from . import plotting

        plotting.plot_series(outdir / "kernel.png", dec.kernel, title="memory kernel",
                             ylabel="kernel")
        plotting.plot_residual(outdir / "residual.png", dec.residual,
                               title="evolution-equation residual")
    return report


def cmd_split(args, tol: Tolerances, outdir: Path, plot: bool) -> VerificationReport:
    generator = _load_generator(args)
    if args.omega <= 0:
        raise WorkbenchError(f"--omega must be positive, got {args.omega}")
    sub = spectral.slow_subspace(generator, args.omega)
    bound = spectral.projected_generator_bound(generator, args.omega)
    coupling = spectral.memory_coupling_norm(sub.projector(), generator)
    gen_norm = generator.operator_norm()

    report = VerificationReport(
        "fast/slow splitting",
        config={"dim": generator.dim, "omega": args.omega, "seed": args.seed},
    )
    report.add("projected_bound", "projected generator norm is capped by the cutoff",
               bound, args.omega * (1.0 + tol.get("split_bound_slack")))
    report.add("memory_coupling", "spectral splitting decouples slow and fast subspaces",
               coupling, tol.get("coupling_vanish") * max(gen_norm, 1e-300))

    certificates = []
    for idx, vec in enumerate(sub.basis):
        ok, failing = spectral.is_slow(vec, generator, args.omega, n_max=8)
        certificates.append({"vector": f"slow_{idx}", "is_slow": bool(ok),
                             "first_failing_power": failing})
    for idx, vec in enumerate(sub.complement_basis):
        ok, failing = spectral.is_slow(vec, generator, args.omega, n_max=8)
        certificates.append({"vector": f"fast_{idx}", "is_slow": bool(ok),
                             "first_failing_power": failing})
    report.add_flag("membership", "power inequalities certify the subspace assignment",
                    all(c["is_slow"] for c in certificates if c["vector"].startswith("slow"))
                    and not any(c["is_slow"] for c in certificates if c["vector"].startswith("fast")))

    reduction_max = 0.0
    for vec in sub.complement_basis[:4]:
        for t in (0.1, 1.0, 10.0):
            reduction_max = max(
                reduction_max,
                spectral.orthogonal_equals_full_on_fast(generator, args.omega, vec, t),
            )
    if sub.complement_basis.shape[0]:
        report.add("fast_reduction", "perturbed evolution reduces to the full one on fast vectors",
                   reduction_max, tol.get("fast_reduction"))

    report.extra = {
        "slow_dim": sub.dim,
        "bound": bound,
        "coupling_norm": coupling,
        "certificates": certificates,
    }
    if plot:
        from . import plotting

        plotting.plot_frequency_split(
            outdir / "split.png", generator.spectral.frequencies, args.omega,
            title="generator frequencies vs cutoff",
        )
    return report


def cmd_oscillator(args, tol: Tolerances, outdir: Path, plot: bool) -> VerificationReport:
    grid_q = phaselab.QuadratureGrid(n_q=args.nodes, n_p=args.nodes)
    if args.demo == "unboundedness":
        report = VerificationReport(
            "conditional-expectation unboundedness",
            config={"n_max": args.n_max, "nodes": args.nodes},
        )
        orders = list(range(args.n_max + 1))
        ratios = []
        for n in orders:
            ratio = phaselab.unboundedness_ratio(n, grid_q)
            ratios.append(ratio)
            report.add(f"ratio_n{n}", "norm ratio of the projected derivative equals n",
                       abs(ratio - n), tol.get("unboundedness"))
            if n > 0:
                shifted = grid_q.with_shift(2.0 * n)
                xn_norm = phaselab.observable_norm(phaselab.observable_xn(n), shifted)
                report.add(f"unit_norm_n{n}", "the probe observables have unit norm",
                           abs(xn_norm - 1.0), tol.get("xn_norm"))
        with (outdir / "unboundedness.csv").open("w") as fh:
            fh.write("n,ratio\n")
            for n, r in zip(orders, ratios):
                fh.write(f"{n},{io.FLOAT_FMT % r}\n")
        if plot:
            from . import plotting

            plotting.plot_unboundedness(outdir / "oscillator.png", orders, ratios,
                                        title="unbounded projected derivative")
        return report

    grid = _grid(args)
    report = VerificationReport(
        "oscillator autocorrelation",
        config={"dt": grid.dt, "n_steps": grid.n_steps, "samples": args.samples,
                "seed": args.seed},
    )
    ens = phaselab.oscillator_trajectories(args.samples, grid.horizon, grid.dt, args.seed)
    est, se = glesim.empirical_acf(ens)
    io.write_series(outdir / "oscillator_acf.csv", est, value_name="acf_estimate")
    target = np.cos(grid.times)
    band = np.where(se.values == 0.0, np.inf, 3.0 * se.values)
    report.add("acf_band", "exact-flow ensemble reproduces the cosine autocorrelation",
               float(np.max(np.abs(est.values - target) / band)), tol.get("acf_band"))
    kernel = phaselab.oscillator_mori_kernel(grid)
    io.write_series(outdir / "oscillator_kernel.csv", kernel, value_name="kernel")
    report.add("kernel_flat", "extracted oscillator kernel is the constant -1",
               float(np.max(np.abs(kernel.values + 1.0))),
               tol.get("kernel_flat_scale") * grid.dt**2)
    if plot:
        from . import plotting

        plotting.plot_acf_bands(
            outdir / "oscillator.png", ScalarSeries(grid, target), {"exact flow": (est, se)},
            title=f"oscillator autocorrelation, M={args.samples}",
        )
    return report


def cmd_ingest(args, tol: Tolerances, outdir: Path, plot: bool) -> VerificationReport:
    ens = io.read_ensemble_csv(args.trajectories, t_col=args.t_col)
    est, se = glesim.empirical_acf(ens)
    io.write_series(outdir / "acf.csv", est, value_name="value")
    io.write_series(outdir / "acf_se.csv", se, value_name="stderr")
    report = VerificationReport(
        "trajectory ingestion",
        config={"dt": ens.grid.dt, "n_steps": ens.grid.n_steps,
                "samples": ens.n_realizations, "input": args.trajectories.name},
    )
    report.add_flag("shape", "table parsed onto a uniform grid with enough realizations",
                    True, measured=float(ens.n_realizations))
    if plot:
        from . import plotting

        plotting.plot_series(outdir / "ingest_acf.png", est,
                             title="empirical autocorrelation of ingested data",
                             ylabel="autocorrelation")
    return report


_COMMANDS = {
    "kernel": cmd_kernel,
    "acf": cmd_acf,
    "simulate": cmd_simulate,
    "mzlab": cmd_mzlab,
    "split": cmd_split,
    "oscillator": cmd_oscillator,
    "ingest": cmd_ingest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed < 0 or args.seed >= 2**64:
            raise WorkbenchError(f"--seed must be a 64-bit unsigned integer, got {args.seed}")
        tol = _tolerances(args)
        worker_count(args.threads)  # validate the env var and request early
        outdir = args.out
        outdir.mkdir(parents=True, exist_ok=True)
        report = _COMMANDS[args.command](args, tol, outdir, plot=not args.no_plot)
        io.write_json(outdir / f"{args.command}_report.json", report.to_payload())
    except WorkbenchError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    for line in report.format_lines():
        print(line)
    if not report.passed:
        print(json.dumps({"failures": [c.to_payload() for c in report.failures]}))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
