"""``decay-cert`` command line.

Exit codes: 0 certified (and, for ``run``, dominated); 1 usage or parse
error; 2 certification refuted or infeasible; 3 certificate passed but the
simulated trajectory left the envelope.
"""

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .certifier import (
    Status,
    certify_closed_form,
    certify_grid,
    exponential_params,
    optimize_rate,
    powerlaw_params,
)
from .comparison import solve_extremal, verify_envelope
from .dynamics import GALLERY, gallery_names, integrate, norm_trajectory
from .errors import DecayCertError, InfeasibleError, ScenarioError
from .output import EXIT_DOMINANCE, EXIT_OK, EXIT_REFUTED, EXIT_USAGE, RunReport, emit_csv, emit_svg
from .scalar_model import ConstantProfile, ExponentialEnvelope, PowerLawEnvelope, PowerLawProfile
from .scenario import build_system, load_scenario


def _choose_envelope(scn):
    """Envelope for the scenario; raises InfeasibleError when none exists."""
    if scn.envelope_mode == "explicit":
        return scn.explicit_envelope
    if not (scn.bound.is_power and not scn.bound.has_forcing):
        raise DecayCertError("automatic envelopes need a power nonlinearity without forcing; "
                             "give an explicit envelope")
    c0, p = scn.bound.alpha.c0, scn.bound.alpha.p
    if scn.eps is None:
        env, _ = optimize_rate(scn.bound, scn.gamma, scn.g0, scn.strictness)
        return env
    if isinstance(scn.gamma, ConstantProfile):
        return ExponentialEnvelope(*exponential_params(c0, p, scn.gamma.kappa_abs, scn.eps))
    if isinstance(scn.gamma, PowerLawProfile):
        return PowerLawEnvelope(*powerlaw_params(c0, p, scn.gamma.c1, scn.gamma.q, scn.eps))
    raise DecayCertError("automatic envelopes need constant or power-law dissipation")


def _certify(scn, env):
    cert, feas = certify_closed_form(scn.bound, scn.gamma, env, scn.g0, scn.strictness)
    if cert.status == Status.INCONCLUSIVE:
        cert = certify_grid(scn.bound, scn.gamma, env, scn.g0, horizon=scn.horizon,
                            n_points=scn.grid_points, strictness=scn.strictness)
        feas = None
    return cert, feas


def _simulate(scn, system):
    if system is None:
        return solve_extremal(scn.bound, scn.gamma, scn.g0, scn.horizon, rtol=scn.rtol, atol=scn.atol)
    if scn.state is not None:
        u0 = scn.state
    else:
        u0 = np.zeros(system.dim)
        u0[0] = scn.g0
    traj = integrate(system, u0, scn.horizon, rtol=scn.rtol, atol=scn.atol)
    return norm_trajectory(traj)


def run_scenario(scn, command="run", out_dir=None):
    """Execute a validated scenario and write its outputs. Returns a RunReport."""
    messages = []
    system = build_system(scn) if command == "run" else None
    try:
        env = _choose_envelope(scn)
    except InfeasibleError as exc:
        report = RunReport(
            scenario=scn.name, command=command, exit_status=EXIT_REFUTED, verdict="infeasible",
            certificate={"status": Status.REFUTED.value, "failed_constraint": exc.constraint,
                         "envelope": None},
            messages=[str(exc)],
        )
        _write_outputs(scn, report, None, None, None, out_dir)
        return report

    cert, feas = _certify(scn, env)
    if not cert.certified:
        messages.append(f"certificate refuted: {cert.failed_constraint}")

    traj = dom = None
    if command == "run":
        traj = _simulate(scn, system)
        dom = verify_envelope(traj, env)
        if not dom.passed:
            messages.append(f"trajectory exceeds envelope by {dom.max_violation:.3e} at t={dom.t_worst:.6g}")

    if not cert.certified:
        code, verdict = EXIT_REFUTED, "refuted"
    elif dom is not None and not dom.passed:
        code, verdict = EXIT_DOMINANCE, "dominance-violated"
    else:
        code, verdict = EXIT_OK, "certified-and-dominated" if dom is not None else "certified"

    report = RunReport(
        scenario=scn.name,
        command=command,
        exit_status=code,
        verdict=verdict,
        certificate=cert.to_dict(),
        feasibility=feas.to_dict() if feas is not None else None,
        dominance=dom.to_dict() if dom is not None else None,
        integrator=traj.stats() if traj is not None else None,
        messages=messages,
    )
    _write_outputs(scn, report, traj, env, (cert, dom), out_dir)
    return report


def _write_outputs(scn, report, traj, env, checks, out_dir):
    path = scn.output_path("report", out_dir)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report.to_json())
    if env is None:
        return
    cert, dom = checks
    path = scn.output_path("csv", out_dir)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        emit_csv(traj, env, path, grid=cert.grid)
    path = scn.output_path("svg", out_dir)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        violation = refutation = None
        if dom is not None and not dom.passed:
            violation = (dom.t_worst, float(traj(dom.t_worst)))
        if cert.witness_t is not None:
            refutation = (cert.witness_t, float(env.bound(cert.witness_t)))
        emit_svg(traj, env, path, horizon=scn.horizon, violation=violation, refutation=refutation,
                 title=scn.name)


def _summary(report):
    lines = [f"{report.scenario}: {report.verdict} (exit {report.exit_status})"]
    cert = report.certificate or {}
    env = cert.get("envelope")
    if env:
        params = ", ".join(f"{k}={v:.6g}" for k, v in env.items() if k != "family")
        lines.append(f"  envelope: {env['family']} ({params})")
    if cert:
        lines.append(f"  certificate: {cert.get('status')}"
                     + (f", failed: {cert['failed_constraint']}" if cert.get("failed_constraint") else ""))
    if report.dominance:
        d = report.dominance
        lines.append(f"  dominance: {'pass' if d['passed'] else 'FAIL'}, worst g - bound = "
                     f"{d['max_violation']:.3e} at t={d['t_worst']:.6g}")
    return "\n".join(lines)


def _overrides(args):
    return {"horizon": args.horizon, "rtol": args.rtol, "atol": args.atol,
            "grid_points": args.grid_points}


def _run_one(path, command, overrides, out_dir):
    try:
        scn = load_scenario(path, overrides=overrides)
        return run_scenario(scn, command=command, out_dir=out_dir)
    except (ScenarioError, DecayCertError) as exc:
        return RunReport(scenario=str(path), command=command, exit_status=EXIT_USAGE,
                         verdict="usage-error", messages=[str(exc)])


def _batch_worker(job):
    path, command, overrides, out_root = job
    out_dir = Path(out_root) / Path(path).stem if out_root else None
    report = _run_one(path, command, overrides, out_dir)
    return str(path), report


def build_parser():
    parser = argparse.ArgumentParser(prog="decay-cert", description="Certified decay envelopes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--horizon", type=float)
        p.add_argument("--rtol", type=float)
        p.add_argument("--atol", type=float)
        p.add_argument("--grid-points", type=int)
        p.add_argument("--out-dir", help="write outputs here instead of next to the scenario")
        p.add_argument("-q", "--quiet", action="store_true")

    p = sub.add_parser("run", help="certify and simulate a scenario")
    p.add_argument("scenario")
    common(p)
    p = sub.add_parser("certify", help="certify only, skip simulation")
    p.add_argument("scenario")
    common(p)
    p = sub.add_parser("batch", help="run several scenarios, outputs isolated per scenario")
    p.add_argument("scenarios", nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--certify-only", action="store_true")
    common(p)
    sub.add_parser("gallery", help="list built-in systems")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which is our refutation code
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    if args.command == "gallery":
        for name in gallery_names():
            print(f"{name:16s} {GALLERY[name][1]}")
        return EXIT_OK

    if args.command == "batch":
        command = "certify" if args.certify_only else "run"
        jobs = [(p, command, _overrides(args), args.out_dir) for p in args.scenarios]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_batch_worker, jobs))
        else:
            results = [_batch_worker(j) for j in jobs]
        worst = EXIT_OK
        for path, report in results:
            if report.exit_status == EXIT_USAGE:
                print(f"{path}: {report.messages[0]}", file=sys.stderr)
            elif not args.quiet:
                print(_summary(report))
            worst = max(worst, report.exit_status)
        return worst

    report = _run_one(args.scenario, args.command, _overrides(args), args.out_dir)
    if report.exit_status == EXIT_USAGE:
        print(f"decay-cert: {report.messages[0]}", file=sys.stderr)
        return EXIT_USAGE
    if not args.quiet:
        print(_summary(report))
    for m in report.messages:
        print(f"decay-cert: {m}", file=sys.stderr)
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
