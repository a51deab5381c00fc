"""
Command-line front end. Generates instances, reduces augmentation inputs to
CA-Node-Steiner-Tree, solves them by iterative randomized rounding, reports
witness-tree bounds and runs the acceptance suites.

Exit codes: 0 success, 1 infeasible input or failed verification, 2 bad input.
"""
import argparse
import copy
import json
import logging
import sys
import time

import wandb

from src.graphs import AugurError, CapExceededError, InfeasibleError, PreconditionError, Tree
from src.instances import KINDS, GeneratorSpec, Instance, ca, generate, path_family_size
from src.lp import CUT_TOL, MAX_CUTS, solve_lp
from src.reductions import (block_tap_to_ca_steiner, cacap_to_ca_steiner, lift_solution, prune_baseline,
                            reduce_one_node_cap, steiner_connects, verify_augmentation)
from src.rounding import DEFAULT_K, iterative_rounding, reference_opt, solve_pipeline
from src.simplex import PIVOT_TOL
from src.steiner import ENUM_CAP, EXACT_CAP, brute_force_opt, normalize_terminal_leaves, tree_optimum
from src.utils import (configure_logging, default_seed, dumps, init_wandb, load_instance, save_instance,
                       set_config)
from src.verify import SUITES, failed_checks, results_to_dict, run_suites
from src.witness import rehang_leaf_adjacent, witness_report

logger = logging.getLogger("scripts.run")


class VerificationFailed(AugurError):
    pass


def emit(args, report):
    if args.json:
        sys.stdout.write(dumps(report) + "\n")
    else:
        for key, value in sorted(report.items()):
            if not isinstance(value, (list, dict)):
                print(f"{key}: {value}")


def cmd_generate(args, config):
    if args.kind == "path-family" and args.t is None:
        args.t = path_family_size(args.eps) if args.eps is not None else 3
    if args.kind in ("random-tree", "random-leaf-adjacent", "random-block-tap", "random-one-node-cap") \
            and args.n is None:
        raise PreconditionError(f"--n is required for {args.kind}")
    spec = GeneratorSpec(args.kind, args.t, args.n, args.links, tuple(args.cycles) if args.cycles else None,
                         args.seed, args.leaf_adjacent or None)
    save_instance(generate(spec), args.out)


def _reduce(instance):
    """CA instance and trace for any instance kind; (None, trace) when nothing needs adding."""
    if instance.kind == "ca":
        return ca(instance), None
    if instance.kind == "cacap":
        return cacap_to_ca_steiner(instance.graph, instance.links)
    if instance.kind == "block-tap":
        return block_tap_to_ca_steiner(Tree(instance.graph), instance.links)
    return reduce_one_node_cap(instance.graph, instance.links)


def cmd_reduce(args, config):
    instance = load_instance(args.instance)
    if instance.kind == "ca":
        raise PreconditionError("instance is already a CA instance")
    inst, trace = _reduce(instance)
    if inst is None:
        emit(args, {"trivial": True, "kind": instance.kind})
        return
    metadata = {"source_kind": instance.kind,
                "back_map": {str(s): list(link) for s, link in sorted(trace.back_map.items())},
                **{key: value for key, value in trace.metadata.items() if isinstance(value, int)}}
    save_instance(Instance("ca", inst.graph, None, inst.sorted_terminals(), metadata), args.out)


def cmd_solve(args, config):
    instance = load_instance(args.instance)
    lp_options = dict(tol=config["lp"]["tol"], pivot_tol=config["lp"]["pivot_tol"],
                      max_cuts=config["lp"]["max_cuts"], exact=config["lp"]["exact"],
                      enum_cap=config["steiner"]["enum_cap"])
    k, seed = config["rounding"]["k"], config["rounding"]["seed"]
    start = time.time()
    report = {"kind": instance.kind, "k": k, "seed": seed}
    if instance.kind in ("one-node-cap", "block-tap"):
        result = solve_pipeline(instance.graph, instance.links, k, seed, config["steiner"]["exact_cap"],
                                **lp_options)
        report.update(cost=result.cost, opt=result.opt, feasible=result.feasible, iterations=result.iterations,
                      trivial=result.trivial, links=[list(e) for e in result.links],
                      baseline=len(prune_baseline(instance.graph, instance.links, "node")))
    else:
        inst, trace = _reduce(instance)
        if args.dump_lp and len(inst.terminals) > 1:
            solve_lp(inst, k, **lp_options)[0].dump(args.dump_lp)
        chosen, log = iterative_rounding(inst, k, seed, **lp_options)
        report.update(cost=len(chosen), opt=reference_opt(inst, config["steiner"]["exact_cap"]),
                      iterations=len(log), steiner=sorted(chosen), trivial=False)
        if trace is None:
            report["feasible"] = steiner_connects(inst, chosen)
        else:
            lifted = lift_solution(chosen, trace)
            report.update(feasible=verify_augmentation(instance.graph, lifted, "edge"),
                          links=[list(e) for e in lifted],
                          baseline=len(prune_baseline(instance.graph, instance.links, "edge")))
    if report["opt"]:
        report["ratio"] = report["cost"] / report["opt"]
    report["runtime"] = time.time() - start
    wandb.log({key: value for key, value in report.items() if isinstance(value, (int, float))})
    emit(args, report)
    if not report["feasible"]:
        raise InfeasibleError("rounded solution does not augment the instance")


def _optimal_tree(inst, config):
    if inst.is_tree_shaped():
        return tree_optimum(inst)
    return normalize_terminal_leaves(brute_force_opt(inst, config["steiner"]["brute_cap"]), inst)


def cmd_witness(args, config):
    instance = load_instance(args.instance)
    if instance.kind != "ca":
        raise PreconditionError("witness analysis needs a CA instance, run `reduce` first")
    inst = ca(instance)
    tree = _optimal_tree(inst, config)
    if args.mode == "tree-following":
        tree = rehang_leaf_adjacent(tree, inst)
    root = args.root if args.root is not None else instance.metadata.get("root")
    report = witness_report(tree, args.mode, root=root if args.mode == "deterministic" else None,
                            progress=not args.quiet)
    if args.csv:
        report.to_csv(args.csv)
    wandb.log({"h_average": float(report.h_average), "passed": int(report.passed)})
    emit(args, report.to_dict())
    if not report.passed:
        raise VerificationFailed(f"H-average {float(report.h_average):.6f} misses the bound {float(report.bound)}")


def cmd_verify(args, config):
    results = run_suites(args.suite, args.trials, args.seed, config["verify"]["jobs"], not args.quiet,
                         args.max_terminals)
    report = results_to_dict(results)
    if args.out:
        with open(args.out, "w") as f:
            f.write(dumps(report) + "\n")
    if args.json:
        sys.stdout.write(dumps(report) + "\n")
    else:
        for suite in report["suites"]:
            print(f"{suite['suite']}: {'passed' if suite['passed'] else 'FAILED'} "
                  f"({len(suite['checks'])} checks, {suite['runtime']:.1f}s)")
    failed = failed_checks(results)
    if failed:
        raise VerificationFailed(f"{len(failed)} checks failed")


def _shared(sub):
    """Global flags repeated after the subcommand; SUPPRESS keeps the top-level value when absent."""
    sub.add_argument('--seed', type=int, default=argparse.SUPPRESS)
    sub.add_argument('--json', action='store_true', default=argparse.SUPPRESS)
    sub.add_argument('--quiet', action='store_true', default=argparse.SUPPRESS)
    sub.add_argument('--verbose', action='store_true', default=argparse.SUPPRESS)
    return sub


def build_parser():
    parser = argparse.ArgumentParser(formatter_class=argparse.ArgumentDefaultsHelpFormatter, allow_abbrev=False)
    parser.add_argument('--seed', type=int, default=default_seed(), help='Base seed (env AUGUR_SEED).')
    parser.add_argument('--seeds', type=int, default=1, help='Number of trials, seeds seed_start.. seed_start+seeds-1.')
    parser.add_argument('--seed_start', type=int, default=None)
    parser.add_argument('--json', action='store_true', help='Machine-readable report on stdout.')
    parser.add_argument('--quiet', action='store_true')
    parser.add_argument('--verbose', action='store_true')

    # tolerances and caps
    parser.add_argument('--tol', type=float, default=CUT_TOL, help='Cut violation tolerance.')
    parser.add_argument('--pivot-tol', type=float, default=PIVOT_TOL)
    parser.add_argument('--max-cuts', type=int, default=MAX_CUTS)
    parser.add_argument('--exact-cap', type=int, default=EXACT_CAP, help='Terminal cap of the exact Steiner solver.')
    parser.add_argument('--enum-cap', type=int, default=ENUM_CAP, help='Terminal cap of component enumeration.')
    parser.add_argument('--exact', action='store_true', help='Rational simplex arithmetic.')

    # wandb
    parser.add_argument('--log-wandb', action='store_true', help='Log to wandb (disabled otherwise).')
    parser.add_argument('--project', type=str, default="augur")
    parser.add_argument('--entity', type=str, default="")
    parser.add_argument('--public', action='store_true', help='If set, uses anonymous wandb logging')
    parser.add_argument('--group', type=str, default="")
    parser.add_argument('--tag', type=str, default='', help='Tag for wandb run.')
    parser.add_argument('--wandb-dir', type=str, default='', help='Directory for wandb files.')

    commands = parser.add_subparsers(dest="command", required=True)

    gen = _shared(commands.add_parser('generate', formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                         allow_abbrev=False))
    gen.add_argument('--kind', required=True, choices=KINDS)
    gen.add_argument('--t', type=int, default=None, help='Path-family length.')
    gen.add_argument('--eps', type=float, default=None, help='Path-family length from a target gap.')
    gen.add_argument('--n', type=int, default=None, help='Steiner nodes (trees) or graph nodes.')
    gen.add_argument('--links', type=int, default=4, help='Random links before feasibility closure.')
    gen.add_argument('--cycles', type=int, nargs="+", default=None, help='Cycle lengths of a random cactus.')
    gen.add_argument('--leaf-adjacent', action='store_true', help='Random Block-TAP links all touch a leaf.')
    gen.add_argument('--out', type=str, default=None)
    gen.set_defaults(func=cmd_generate)

    red = _shared(commands.add_parser('reduce', formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                         allow_abbrev=False))
    red.add_argument('instance')
    red.add_argument('--out', type=str, default=None)
    red.set_defaults(func=cmd_reduce)

    sol = _shared(commands.add_parser('solve', formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                         allow_abbrev=False))
    sol.add_argument('instance')
    sol.add_argument('--k', type=int, default=DEFAULT_K, help='Terminals per component.')
    sol.add_argument('--dump-lp', type=str, default=None, help='Write the first LP solution as JSON.')
    sol.set_defaults(func=cmd_solve)

    wit = _shared(commands.add_parser('witness', formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                         allow_abbrev=False))
    wit.add_argument('instance')
    wit.add_argument('--mode', default='deterministic', choices=['deterministic', 'tree-following', 'brute'])
    wit.add_argument('--root', type=int, default=None, help='Final Steiner leaf to root the decomposition at.')
    wit.add_argument('--csv', type=str, default=None, help='Per-node w and H(w) table.')
    wit.set_defaults(func=cmd_witness)

    ver = _shared(commands.add_parser('verify', formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                         allow_abbrev=False))
    ver.add_argument('--suite', nargs="+", default=["all"], choices=list(SUITES) + ["all"])
    ver.add_argument('--trials', type=int, default=None, help='Trials per suite (suite default if unset).')
    ver.add_argument('--jobs', type=int, default=1)
    ver.add_argument('--max-terminals', type=int, default=None)
    ver.add_argument('--out', type=str, default=None, help='Also write the JSON report here.')
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        og_args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    configure_logging(og_args)
    start = og_args.seed if og_args.seed_start is None else og_args.seed_start

    status = 0
    for i in range(og_args.seeds):
        args = copy.deepcopy(og_args)
        args.seed = i + start
        exp_name = f'{args.command}_{args.seed}_{args.group}'
        init_wandb(args, exp_name)
        try:
            args.func(args, set_config(args))
        except PreconditionError as e:
            logger.error("%s", e)
            status = max(status, 2)
        except (InfeasibleError, CapExceededError, VerificationFailed) as e:
            logger.error("%s", e)
            status = max(status, 1)
        except json.JSONDecodeError as e:
            logger.error("malformed JSON: %s", e)
            status = max(status, 2)
        except OSError as e:
            logger.error("%s", e)
            status = max(status, 2)
        finally:
            wandb.finish()
    return status


if __name__ == "__main__":
    sys.exit(main())
