"""Command-line entry point: ``pipewft run|amplify|converge|stability|check``.

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from ..errors import (
    DomainError,
    EventCapExceeded,
    InvariantViolation,
    PipeWFTError,
    ProfileError,
    UsageError,
)
from ..gas_core import GasState, PressureLaw
from ..profiles import SmoothProfile
from ..riemann import WaveFamily
from . import experiments as X
from . import output
from .config import load_config, preset_names

log = logging.getLogger("pipewft")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INVARIANT = 0, 2, 3, 4


def _parse_override(text: str):
    key, _, val = text.partition("=")
    if not key or not _:
        raise UsageError("overrides look like section.field=value", got=text)
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def _emit(args, name: str, payload: dict) -> Path:
    root = Path(args.out_dir)
    root.mkdir(parents=True, exist_ok=True)
    return output.write_json(root / f"{name}.json", payload)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    over = dict(_parse_override(o) for o in args.set or [])
    if args.seed is not None:
        over["seed"] = args.seed
    if over:
        cfg = cfg.with_overrides(**over)
    rep = X.run_scenario(cfg, out_dir=args.out_dir)
    s = rep.summary
    print(f"{cfg.name}: {s['events']} events, {s['fronts_final']} fronts at t={s['t_end']}, "
          f"violations={s['violations']}, admissible={s['admissible']}")
    return EXIT_INVARIANT if s["violations"] and s["admissible"] else EXIT_OK


def cmd_amplify(args) -> int:
    res = X.amplification_experiment(args.vbar_over_c, args.da_over_a, args.repeats, -abs(args.sigma))
    payload = res.to_dict()
    fit = X.fit_kgrande(args.vbar_over_c) if args.vbar_over_c > 0 else None
    if fit is not None:
        payload["fit"] = fit.to_dict()
    _emit(args, "amplify", payload)
    rows = zip(range(len(res.sizes)), res.sizes, res.predicted)
    output.write_csv(Path(args.out_dir) / "amplify.csv", ("pairs", "measured", "predicted"), rows)
    print(f"K({args.vbar_over_c}) = {res.kgrande:.6g}; |sigma2| after {len(res.crossings)} pairs: "
          f"{res.sizes[-1]:.6g} (predicted {res.predicted[-1]:.6g})")
    if res.breakdown:
        print(f"regime breakdown at pair {res.breakdown_pair}: {res.breakdown}")
    return EXIT_OK


def cmd_converge(args) -> int:
    law = PressureLaw.isothermal(1.0)
    if args.profile:
        smooth = SmoothProfile.from_dict(json.loads(Path(args.profile).read_text()))
    else:
        smooth = SmoothProfile.ramp(1.0, 1.0, 1.05)
    ns = tuple(int(n) for n in args.n_list.split(","))
    u_left = GasState(1.0, 0.3)
    from ..junction import CouplingLaw

    claw = CouplingLaw.smooth_section()
    datum = X.stationary_datum_factory(law, claw, u_left, [(WaveFamily.SECOND, -0.05, smooth.knots[0] - 0.5)])
    res = X.convergence_experiment(smooth, datum, ns=ns, eps=args.eps, law=law, claw=claw)
    stat = X.stationary_convergence(smooth, u_left, ns=ns, law=law, claw=claw)
    _emit(args, "converge", {"evolution": res.to_dict(), "stationary": stat.to_dict()})
    for n, row in zip(res.ns, res.distances):
        print(f"n={n:4d}  " + "  ".join(f"{d:.4e}" for d in row))
    print(f"stationary slope {stat.slope:.3f}")
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = load_config(args.config)
    sc, params = cfg.build()
    res = X.stability_experiment(sc, params, X.perturb_datum(sc.datum, args.perturb, sc.profile))
    _emit(args, "stability", res.to_dict())
    print(f"empirical L = {res.lipschitz:.4f} over {len(res.times)} times")
    return EXIT_OK


def cmd_check(args) -> int:
    res = X.glimm_suite(args.cases, seed=args.seed or 0)
    _emit(args, "check", res.to_dict())
    print(f"{res.cases} scenarios, {res.events} events, {res.violations} increases of upsilon "
          f"(worst {res.worst_increase:.3e})")
    return EXIT_INVARIANT if res.violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pipewft", description="Front tracking for gas flow in pipes.")
    p.add_argument("--seed", type=int, default=None, help="RNG seed for randomized suites")
    p.add_argument("--out-dir", default="out", help="directory for emitted tables")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="evolve one scenario file or preset (" + ", ".join(preset_names()) + ")")
    r.add_argument("config")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field, e.g. params.eps=0.005")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("amplify", help="2-wave through repeated up-down section pairs")
    a.add_argument("--vbar-over-c", type=float, required=True)
    a.add_argument("--da-over-a", type=float, required=True)
    a.add_argument("--repeats", type=int, default=10)
    a.add_argument("--sigma", type=float, default=1e-3)
    a.set_defaults(func=cmd_amplify)

    c = sub.add_parser("converge", help="runs on refined staircases of a smooth section")
    c.add_argument("--profile", help="JSON file with a smooth profile (default: a ramp)")
    c.add_argument("--n-list", default="4,8,16,32")
    c.add_argument("--eps", type=float, default=5e-3)
    c.set_defaults(func=cmd_converge)

    s = sub.add_parser("stability", help="L1 distance of two nearby runs")
    s.add_argument("config")
    s.add_argument("--perturb", type=float, default=1e-2)
    s.set_defaults(func=cmd_stability)

    k = sub.add_parser("check", help="Glimm-functional monotonicity over random admissible scenarios")
    k.add_argument("--cases", type=int, default=50)
    k.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValidationError, UsageError, ProfileError, DomainError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        print(output.dumps(exc.context.get("record", {})), file=sys.stderr)
        return EXIT_INVARIANT
    except (EventCapExceeded, PipeWFTError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
