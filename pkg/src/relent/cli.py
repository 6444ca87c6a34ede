"""Command-line front end: state generation, E_R computation, restricted
variants with certificates, and verification suites.

Exit codes: 0 success, 1 verification failures, 2 input errors, 3 solver
non-convergence. All subcommands are deterministic given their full flag set
including --seed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as rio
from .io import FormatError, RunConfig
from .povm import restricted_ree
from .qops import DensityOperator, random_separable, random_state
from .refsets import ReferenceSetSpec, relative_entropy_of_entanglement
from .states import bell_phi_plus, ghz_state, tiles_state, werner_state
from .verify import DEFAULT_SAMPLES, run_suite

GENERATOR_TAG = "pcg64-v1"


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relent", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate canonical or random states")
    g.add_argument("kind", choices=["bell", "ghz", "werner", "tiles", "ginibre", "separable"])
    g.add_argument("--dims", type=int, nargs="+", default=None)
    g.add_argument("--rank", type=int, default=None)
    g.add_argument("--lam", type=float, default=0.75, help="Werner weight λ")
    g.add_argument("--n", type=int, default=3, help="GHZ party count")
    g.add_argument("--terms", type=int, default=8, help="separable mixture size")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    def _solver_flags(sp):
        sp.add_argument("--config", default=None, help="RunConfig JSON file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", required=True)

    r = sub.add_parser("ree", help="relative entropy of entanglement E_R^P")
    r.add_argument("state")
    r.add_argument("--set", dest="set_kind", choices=["sep", "ppt"], default="sep")
    r.add_argument("--groups", type=str, default=None,
                   help="partition as comma/colon list, e.g. 0,1:2,3")
    _solver_flags(r)

    rr = sub.add_parser("rree", help="measurement-restricted E_R with certificate")
    rr.add_argument("state")
    rr.add_argument("--set", dest="set_kind", choices=["sep", "ppt"], default="sep")
    rr.add_argument("--class", dest="mclass",
                    choices=["lo", "locc1", "sep", "ppt", "all"], default="lo")
    rr.add_argument("--groups", type=str, default=None)
    rr.add_argument("--rounds", type=int, default=None)
    _solver_flags(rr)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=["proof-chain", "theorem1", "theorem2", "mutual"])
    v.add_argument("--samples", type=int, default=None)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--threads", type=int, default=1,
                   help="instance parallelism (currently runs serially)")
    v.add_argument("--out-json", default=None)
    v.add_argument("--out-csv", default=None)
    return p


def _load_config(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"config is not valid JSON: {exc}") from exc
    cfg = RunConfig.from_dict(data)
    if getattr(args, "set_kind", None):
        cfg.set_kind = args.set_kind
    if getattr(args, "mclass", None):
        cfg.measurement_class = args.mclass
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "rounds", None) is not None:
        cfg.rounds = args.rounds
    return cfg


def _parse_groups(text: str | None, n_parties: int):
    if not text:
        return ()
    groups = []
    for block in text.split(":"):
        groups.append(tuple(int(x) for x in block.split(",") if x != ""))
    return tuple(groups)


def _cmd_gen(args) -> int:
    kind = args.kind
    meta = {"name": kind, "seed": args.seed, "generator": GENERATOR_TAG}
    witness = None
    if kind == "bell":
        state = bell_phi_plus()
    elif kind == "ghz":
        state = ghz_state(args.n)
    elif kind == "werner":
        state = werner_state(args.lam)
        meta["lam"] = args.lam
    elif kind == "tiles":
        state = tiles_state()
    elif kind == "ginibre":
        dims = tuple(args.dims or (2, 2))
        state = random_state(dims, rank=args.rank, seed=args.seed)
    else:  # separable
        dims = tuple(args.dims or (2, 2))
        state, witness = random_separable(dims, n_terms=args.terms, seed=args.seed)
    rio.emit_state(state, args.out, witness=witness, metadata=meta)
    return 0


def _spec_for(state: DensityOperator, cfg: RunConfig, groups) -> ReferenceSetSpec:
    return ReferenceSetSpec(cfg.set_kind, state.dims, groups)


def _cmd_ree(args) -> int:
    cfg = _load_config(args)
    state, _, _ = rio.parse_state(args.state)
    spec = _spec_for(state, cfg, _parse_groups(args.groups, state.n_parties))
    res = relative_entropy_of_entanglement(state, spec, cfg.solver_config(), seed=cfg.seed)
    witness_path = None
    if res.witness is not None:
        witness_path = args.out + ".witness.json"
        sigma = DensityOperator(
            0.5 * (res.sigma + res.sigma.conj().T), state.dims
        )
        rio.emit_state(sigma, witness_path, witness=res.witness,
                       metadata={"role": "optimal reference state"})
    doc = rio.result_to_json(
        res, {"command": "ree", "set": cfg.set_kind, "seed": cfg.seed,
              "witness_path": witness_path},
    )
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    return 0 if res.converged else 3


def _cmd_rree(args) -> int:
    cfg = _load_config(args)
    state, _, _ = rio.parse_state(args.state)
    spec = _spec_for(state, cfg, _parse_groups(args.groups, state.n_parties))
    cv = restricted_ree(
        state, spec, cfg.measurement_spec(), config=cfg.solver_config(),
        seed=cfg.seed, rounds=cfg.rounds,
    )
    mpath = args.out + ".povm.json"
    rio.emit_povm(cv.witness_measurement, mpath, metadata={"role": "witness measurement"})
    spath = args.out + ".sigma.json"
    sigma = np.asarray(cv.witness_state)
    sigma = 0.5 * (sigma + sigma.conj().T)
    w = np.linalg.eigvalsh(sigma)
    if w.min() < 0:
        sigma = sigma + (abs(w.min()) + 1e-15) * np.eye(sigma.shape[0])
        sigma /= np.trace(sigma).real
    rio.emit_state(DensityOperator(sigma, state.dims), spath,
                   metadata={"role": "reference state at the estimate"})
    doc = rio.result_to_json(
        cv, {"command": "rree", "set": cfg.set_kind, "class": cfg.measurement_class,
             "seed": cfg.seed, "measurement_path": mpath, "sigma_path": spath},
    )
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    return 0




def _cmd_verify(args) -> int:
    samples = args.samples or DEFAULT_SAMPLES[args.suite]
    report = run_suite(args.suite, samples, seed=args.seed)
    if args.out_json:
        with open(args.out_json, "w") as fh:
            json.dump(rio.report_to_json(report), fh, indent=1)
            fh.write("\n")
    if args.out_csv:
        rio.report_to_csv(report, args.out_csv)
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "ree":
            return _cmd_ree(args)
        if args.command == "rree":
            return _cmd_rree(args)
        return _cmd_verify(args)
    except (FormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
