"""Command-line front end. CSV (or JSON) goes to ``--out`` or stdout; ``--plot`` adds a PNG.

Exit codes: 0 success, 2 usage/config error, 3 domain error, 4 IO error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from spinweave import analysis, disorder
from spinweave.dynamics import (
    QuantumState,
    abc_chain_energies,
    analytic_abc_spectrum,
    diagonalize,
    fidelity_series,
    site_amplitudes,
)
from spinweave.entanglement import eof_from_amplitudes
from spinweave.network import (
    ABCParams,
    MissingLabel,
    NetworkError,
    SpinNetwork,
    assemble_hamiltonian,
    build_structure,
    load_network,
    dump_network,
)
from spinweave.partition import (
    NotConnected,
    coarsest_equitable_partition,
    quotient_graph,
    validate_partition,
)

EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 2, 3, 4
ABC_STRUCTURES = ("full17", "quotient11", "chain9")


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    try:
        Path(args.out).write_text(text)
    except OSError as exc:
        raise CLIError(f"cannot write {args.out}: {exc.strerror}", EXIT_IO) from exc


def _figure_path(args) -> Path | None:
    if not args.plot:
        return None
    if args.out is None:
        raise CLIError("--plot needs --out (the figure is written next to it as .png)")
    return Path(args.out).with_suffix(".png")


def _check_ratio(ratio: float) -> None:
    if not (math.isfinite(ratio) and 0 < ratio <= 1):
        raise CLIError(f"--ratio must satisfy 0 < ratio <= 1, got {ratio}")


def _network(args) -> SpinNetwork:
    if args.structure == "custom":
        if not args.input:
            raise CLIError("--structure custom needs --input PATH")
        try:
            return load_network(args.input)
        except OSError as exc:
            raise CLIError(f"cannot read {args.input}: {exc.strerror}", EXIT_IO) from exc
        except (NetworkError, ValueError) as exc:
            raise CLIError(f"invalid network file: {exc}") from exc
    if args.structure in ABC_STRUCTURES:
        _check_ratio(args.ratio)
    return build_structure(args.structure, args.ratio)


def _square9_spectrum() -> np.ndarray:
    p3 = np.array([-math.sqrt(2), 0.0, math.sqrt(2)])
    return np.sort(np.add.outer(p3, p3).ravel())


def cmd_spectrum(args) -> None:
    net = _network(args)
    numeric = diagonalize(assemble_hamiltonian(net)).energies
    analytic = None
    if net.kind == "square9":
        analytic = _square9_spectrum()
    elif net.kind in ABC_STRUCTURES:
        spec = analytic_abc_spectrum(ABCParams.from_ratio(args.ratio))
        analytic = {
            "chain9": np.array(spec.chain),
            "quotient11": np.sort(np.r_[spec.chain, spec.decoupled_to_chain]),
            "full17": spec.all(),
        }[net.kind]
    rows = []
    for k, e in enumerate(numeric):
        if analytic is None:
            rows.append((k + 1, e, "", ""))
        else:
            rows.append((k + 1, e, analytic[k], abs(e - analytic[k])))
    _emit(args, _csv_text(["index", "numeric", "analytic", "deviation"], rows))
    fig = _figure_path(args)
    if fig:
        from spinweave.plotting import plot_spectrum

        plot_spectrum(numeric, analytic, fig, title=net.kind)


def cmd_evolve(args) -> None:
    net = _network(args)
    if args.dt <= 0 or args.tmax < 0:
        raise CLIError("--dt must be positive and --tmax non-negative")
    try:
        src = net.label_index(args.inject)
        watch = [net.label_index(lab) for lab in ("A", "B", "C")]
    except MissingLabel as exc:
        raise CLIError(f"network has no site labelled {exc.args[0]}") from exc
    eig = diagonalize(assemble_hamiltonian(net))
    times = np.arange(0.0, args.tmax + 0.5 * args.dt, args.dt)
    amps = site_amplitudes(eig, src, watch, times)
    eofs = eof_from_amplitudes(amps[:, 0], amps[:, 2])
    psi0 = QuantumState.site(net.n, src)
    fid = fidelity_series(eig, psi0, psi0, times)
    pops = np.abs(amps) ** 2
    rows = [(t, e, f, *p) for t, e, f, p in zip(times, eofs, fid, pops)]
    _emit(args, _csv_text(["t", "eof", "fidelity", "pop_A", "pop_B", "pop_C"], rows))
    fig = _figure_path(args)
    if fig:
        from spinweave.plotting import plot_evolution

        plot_evolution(times, eofs, fid, fig, title=f"{net.kind}, ratio {args.ratio}")


def _ratio_grid(args) -> np.ndarray:
    if args.steps < 1:
        raise CLIError("--steps must be >= 1")
    for r in (args.rmin, args.rmax):
        _check_ratio(r)
    if args.rmin > args.rmax:
        raise CLIError("--rmin must not exceed --rmax")
    if args.steps == 1:
        return np.array([args.rmin])
    return np.linspace(args.rmin, args.rmax, args.steps)


def cmd_sweep(args) -> None:
    if args.structure not in ABC_STRUCTURES:
        raise CLIError("sweep needs an ABC structure (full17, quotient11, chain9)")
    grid = _ratio_grid(args)
    results = analysis.ratio_sweep(grid, mode=args.mode, structure=args.structure)
    rows = [(r, p.t_peak, p.eof_peak, p.kind, p.plateau) for r, p in results]
    _emit(args, _csv_text(["ratio", "t_peak", "eof_peak", "kind", "plateau_flag"], rows))
    best = max(rows, key=lambda row: row[2])
    print(f"best grid point: ratio={best[0]:.6f} eof={best[2]:.5f} t={best[1]:.4f}", file=sys.stderr)
    fig = _figure_path(args)
    if fig:
        from spinweave.plotting import plot_sweep

        plot_sweep(grid, [r[2] for r in rows], [r[1] for r in rows], fig, args.mode)


def cmd_flat(args) -> None:
    if args.n1 is None or args.n2 is None:
        raise CLIError("flat needs --n1 and --n2")
    try:
        ratio = analysis.flat_ratio(args.n1, args.n2)
    except analysis.NoSolutionInDomain as exc:
        raise CLIError(f"NoSolutionInDomain: {exc}", EXIT_DOMAIN) from exc
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    net = build_structure("chain9" if args.structure not in ABC_STRUCTURES else args.structure, ratio)
    check = analysis.periodicity_check(net)
    e, ep, _, _ = abc_chain_energies(ratio)
    rows = [(args.n1, args.n2, ratio, e / ep, check.revival_time, check.revival_fidelity, check.is_periodic)]
    header = ["n1", "n2", "ratio", "e_over_eprime", "revival_time", "revival_fidelity", "periodic"]
    _emit(args, _csv_text(header, rows))
    fig = _figure_path(args)
    if fig:
        from spinweave.plotting import plot_evolution

        eig = diagonalize(assemble_hamiltonian(net))
        src = net.label_index("B")
        times = np.linspace(0, 3 * check.revival_time, 3000)
        amps = site_amplitudes(eig, src, [net.label_index("A"), net.label_index("C")], times)
        psi0 = QuantumState.site(net.n, src)
        plot_evolution(
            times, eof_from_amplitudes(amps[:, 0], amps[:, 1]), fidelity_series(eig, psi0, psi0, times),
            fig, title=f"flat ratio {ratio:.12f} (n1={args.n1}, n2={args.n2})",
        )


def cmd_disorder(args) -> None:
    _check_ratio(args.ratio)
    if args.dsteps < 1 or args.dmax < 0 or args.realizations < 1:
        raise CLIError("need --dsteps >= 1, --dmax >= 0 and --realizations >= 1")
    structures = disorder.STRUCTURES if args.structure == "all" else (args.structure,)
    if any(s not in ABC_STRUCTURES for s in structures):
        raise CLIError("disorder needs an ABC structure (full17, quotient11, chain9) or all")
    kinds = ("diagonal", "offdiagonal") if args.kind == "both" else (args.kind,)
    d_values = np.linspace(0.0, args.dmax, args.dsteps) if args.dsteps > 1 else np.array([args.dmax])
    params = ABCParams.from_ratio(args.ratio)
    rows = []
    for kind in kinds:
        spec = disorder.DisorderSpec(kind, realizations=args.realizations, base_seed=args.seed)
        table = disorder.structure_robustness_comparison(params, spec, d_values, structures)
        for name in structures:
            for res in table[name]:
                rows.append((name, kind, res.D, res.mean_eof, res.std_eof, res.realizations, args.seed))
    header = ["structure", "kind", "D", "mean_eof", "std_eof", "realizations", "seed"]
    _emit(args, _csv_text(header, rows))
    fig = _figure_path(args)
    if fig:
        from spinweave.plotting import plot_disorder

        plot_disorder([r[:5] for r in rows], fig)


def _seed_index(net: SpinNetwork, raw: str | None) -> int:
    if raw is None:
        return net.label_index("A") if net.has_labels(("A",)) else 0
    if raw in ("A", "B", "C"):
        try:
            return net.label_index(raw)
        except MissingLabel as exc:
            raise CLIError(f"network has no site labelled {raw}") from exc
    try:
        k = int(raw) - 1
    except ValueError as exc:
        raise CLIError(f"--seed-site must be a 1-based site number or A/B/C, got {raw!r}") from exc
    if not 0 <= k < net.n:
        raise CLIError(f"--seed-site {raw} out of range 1..{net.n}")
    return k


def cmd_partition(args) -> None:
    net = _network(args)
    seed = _seed_index(net, args.seed_site)
    try:
        part = coarsest_equitable_partition(net, seed)
    except NotConnected as exc:
        raise CLIError(f"NotConnected: {exc}") from exc
    payload = part.to_dict()
    payload["sizes"] = part.sizes
    payload["violations"] = validate_partition(net, part)
    try:
        payload["quotient"] = quotient_graph(net, part).to_dict()
    except ValueError as exc:
        payload["quotient"] = None
        payload["violations"].append(str(exc))
    _emit(args, json.dumps(payload, indent=2) + "\n")


def cmd_timestudy(args) -> None:
    for r in (args.rmin, args.rmax):
        _check_ratio(r)
    if args.steps < 1 or args.tmax <= 0:
        raise CLIError("need --steps >= 1 and --tmax > 0")
    structure = args.structure if args.structure in ABC_STRUCTURES else "chain9"
    rows = analysis.near_flat_time_study(
        (args.rmin, args.rmax), args.steps, args.tmax, seed=args.seed, structure=structure
    )
    _emit(args, _csv_text(["ratio", "t_E"], rows))
    fig = _figure_path(args)
    if fig:
        from spinweave.plotting import plot_time_study

        plot_time_study([r for r, _ in rows], [t for _, t in rows], fig)


def cmd_build(args) -> None:
    net = _network(args)
    if args.out is None:
        sys.stdout.write(json.dumps(net.to_dict(), indent=2) + "\n")
        return
    try:
        dump_network(net, args.out)
    except OSError as exc:
        raise CLIError(f"cannot write {args.out}: {exc.strerror}", EXIT_IO) from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--structure", default=None,
                        choices=["full17", "quotient11", "chain9", "square9", "custom", "all"])
    common.add_argument("--ratio", type=float, default=1.0, help="delta/Delta in (0, 1]")
    common.add_argument("--input", help="network JSON for --structure custom")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--plot", action="store_true", help="also render a PNG next to --out")

    parser = argparse.ArgumentParser(prog="spinweave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="numeric vs closed-form eigenenergies")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("evolve", parents=[common], help="EOF, fidelity and populations vs time")
    p.add_argument("--tmax", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--inject", default="B", choices=["A", "B", "C"])
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", parents=[common], help="peak EOF across coupling ratios")
    p.add_argument("--rmin", type=float, default=0.01)
    p.add_argument("--rmax", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--mode", choices=["first", "window100"], default="first")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("flat", parents=[common], help="flat coupling ratio for E' n1 = E n2")
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.set_defaults(func=cmd_flat)

    p = sub.add_parser("disorder", parents=[common], help="ensemble EOF under static disorder")
    p.add_argument("--kind", choices=["diagonal", "offdiagonal", "both"], default="both")
    p.add_argument("--dmax", type=float, default=0.5)
    p.add_argument("--dsteps", type=int, default=11)
    p.add_argument("--realizations", type=int, default=1000)
    p.set_defaults(func=cmd_disorder)

    p = sub.add_parser("partition", parents=[common], help="coarsest equitable partition + quotient")
    p.add_argument("--seed-site", help="1-based site number or A/B/C (default: A, else site 1)")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("timestudy", parents=[common], help="time of highest EOF near a flat ratio")
    p.add_argument("--rmin", type=float, default=0.50)
    p.add_argument("--rmax", type=float, default=0.51)
    p.add_argument("--steps", type=int, default=2000, help="number of random ratios")
    p.add_argument("--tmax", type=float, default=4000.0, help="time window")
    p.set_defaults(func=cmd_timestudy)

    p = sub.add_parser("build", parents=[common], help="write a structure as network JSON")
    p.set_defaults(func=cmd_build)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.structure is None:
        args.structure = "all" if args.command == "disorder" else "chain9"
    elif args.structure == "all" and args.command != "disorder":
        parser.error("--structure all is only valid for disorder")
    try:
        args.func(args)
    except CLIError as exc:
        print(f"spinweave {args.command}: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
