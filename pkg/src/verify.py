"""
Acceptance suites. Every suite is a list of seeded trials; a trial returns
Check records (value, bound, tolerance, pass flag). Trials are independent,
so they can be fanned over a process pool and merged back in trial order.
"""
import itertools
import logging
import time
from collections import namedtuple
from fractions import Fraction
from multiprocessing import Pool

import numpy as np
import pyprind
import wandb

from src.graphs import harmonic, harmonic_concavity_holds, high_degree_excess
from src.instances import (gen_five_layer, gen_path_family, gen_random_binary_tree, gen_random_block_tap,
                           gen_random_cacap, gen_random_leaf_adjacent, gen_random_one_node_cap,
                           gen_random_tree_instance, five_layer_node, random_cycle_spec)
from src.lp import enumerate_cuts_oracle, separate, solve_lp
from src.reductions import (block_tap_to_ca_steiner, cacap_to_ca_steiner, forward_image, lift_solution,
                            reduce_one_node_cap, steiner_connects, validate_ca_instance, verify_augmentation)
from src.rounding import DEFAULT_K, solve_pipeline
from src.steiner import (brute_force_opt, enumerate_components, intermediate_leaf_counts, k_restricted_decompose,
                         leaf_map, leaf_map_disjoint, lower_bound_holds, normalize_terminal_leaves,
                         restricted_tree_feasible, tree_optimum)
from src.utils import summary_stats
from src.witness import (GAMMA_BOUND, brute_force_gamma, invariant_base_case, psi, psi_argmax,
                         rehang_leaf_adjacent, witness_report)

logger = logging.getLogger(__name__)

Check = namedtuple("Check", ["suite", "name", "value", "bound", "tolerance", "passed"])
SuiteResult = namedtuple("SuiteResult", ["suite", "checks", "passed", "stats", "runtime"])

FIVE_LAYER_EXPECTED = (135 * harmonic(2) + 36 * harmonic(4) + 44 * harmonic(5) + 9 * harmonic(8)
                       + 8 * harmonic(9) + harmonic(12) + harmonic(15) + harmonic(16)) / 235
FIVE_LAYER_FLOOR = Fraction(18504, 10000)
ROUNDING_RATIO_CEILING = 2.5
LP_TOL = 1e-7

DEFAULT_TRIALS = {
    "bounds": 500,
    "path-family": 49,
    "leaf-adjacent": 200,
    "reductions": 200,
    "k-restricted": 100,
    "lp": 50,
    "rounding": 100,
    "structural": 40,
}
SUITES = tuple(DEFAULT_TRIALS)


def _check(suite, name, value, bound, passed, tolerance=0):
    return Check(suite, name, value, bound, tolerance, bool(passed))


def trial_bounds(trial, seed):
    checks = []
    if trial == 0:
        report = witness_report(tree_optimum(gen_five_layer()), root=five_layer_node(2, 2, 2))
        checks.append(_check("bounds", "five-layer/exact", report.h_average, FIVE_LAYER_EXPECTED,
                             report.h_average == FIVE_LAYER_EXPECTED))
        checks.append(_check("bounds", "five-layer/above-floor", report.h_average, FIVE_LAYER_FLOOR,
                             report.h_average > FIVE_LAYER_FLOOR))
    rng = np.random.default_rng(seed + trial)
    n = int(rng.integers(1, 301))
    report = witness_report(tree_optimum(gen_random_tree_instance(n, seed + trial)))
    checks.append(_check("bounds", f"random-tree/{trial}/h-average", report.h_average, GAMMA_BOUND,
                         report.h_average < GAMMA_BOUND))
    failures = sum(len(a.failures) for a in report.audits)
    side = all(a.increase_ok and a.dominance_ok and a.unchanged_ok for a in report.audits)
    checks.append(_check("bounds", f"random-tree/{trial}/invariant", failures, 0, failures == 0 and side))
    return checks


def trial_path_family(trial, seed):
    t = trial + 2
    expected = harmonic(3) - Fraction(2, 3 * t)
    tree = tree_optimum(gen_path_family(t))
    checks = []
    for mode in ("tree-following", "deterministic"):
        report = witness_report(tree, mode=mode)
        checks.append(_check("path-family", f"t={t}/{mode}", report.h_average, expected,
                             report.h_average == expected))
    if t <= 4:
        value, _ = brute_force_gamma(tree)
        checks.append(_check("path-family", f"t={t}/brute", value, expected, value == expected))
    return checks


def leaf_adjacent_block_tap_report(n, link_count, seed):
    """Tree-following report on the re-hung optimum of a reduced leaf-adjacent Block-TAP input."""
    tree, links = gen_random_block_tap(n, link_count, seed, leaf_adjacent=True)
    inst, _ = block_tap_to_ca_steiner(tree, links)
    opt = normalize_terminal_leaves(brute_force_opt(inst), inst)
    return witness_report(rehang_leaf_adjacent(opt, inst), mode="tree-following")


def trial_leaf_adjacent(trial, seed):
    rng = np.random.default_rng(seed + trial)
    n = int(rng.integers(1, 101))
    report = witness_report(tree_optimum(gen_random_leaf_adjacent(n, seed + trial)), mode="tree-following")
    checks = [_check("leaf-adjacent", f"{trial}/h-average", report.h_average, harmonic(3),
                     report.h_average <= harmonic(3))]
    if trial % 2:
        report = leaf_adjacent_block_tap_report(int(rng.integers(4, 11)), int(rng.integers(1, 6)), seed + trial)
        checks.append(_check("leaf-adjacent", f"{trial}/block-tap/h-average", report.h_average, harmonic(3),
                             report.h_average <= harmonic(3)))
    return checks


def _equivalence(graph, links, inst, trace, mode):
    mismatches = 0
    cost_ok = True
    for mask in range(1 << len(links)):
        chosen = [i for i in range(len(links)) if mask >> i & 1]
        feasible = verify_augmentation(graph, links.subset(chosen), mode)
        image = forward_image(chosen, trace)
        if feasible != steiner_connects(inst, image):
            mismatches += 1
        cost_ok &= len(lift_solution(image, trace)) == len(image)
    return mismatches, cost_ok


def trial_reductions(trial, seed):
    rng = np.random.default_rng(seed + trial)
    if trial % 2 == 0:
        n = int(rng.integers(4, 11))
        graph, links = gen_random_one_node_cap(n, int(rng.integers(1, 6)), seed + trial, max_links=8)
        inst, trace = reduce_one_node_cap(graph, links)
        name, mode = f"one-node-cap/{trial}", "node"
    else:
        cycles = random_cycle_spec(int(rng.integers(3, 9)), rng)
        graph, links = gen_random_cacap(cycles, int(rng.integers(1, 5)), seed + trial, max_links=8)
        inst, trace = cacap_to_ca_steiner(graph, links)
        name, mode = f"cacap/{trial}", "edge"
    if inst is None:
        return [_check("reductions", f"{name}/trivial", 0, 0, True)]
    mismatches, cost_ok = _equivalence(graph, links, inst, trace, mode)
    return [
        _check("reductions", f"{name}/equivalence", mismatches, 0, mismatches == 0),
        _check("reductions", f"{name}/cost", int(cost_ok), 1, cost_ok),
        _check("reductions", f"{name}/valid", int(validate_ca_instance(inst).ok), 1, validate_ca_instance(inst).ok),
    ]


def trial_k_restricted(trial, seed):
    rng = np.random.default_rng(seed + trial)
    opt = tree_optimum(gen_random_tree_instance(int(rng.integers(2, 41)), seed + trial))
    checks = []
    for m in (1, 2, 3):
        decomp = k_restricted_decompose(opt, m)
        best = min(decomp.costs)
        checks.append(_check("k-restricted", f"{trial}/m={m}/best", best, (1 + Fraction(4, m)) * opt.cost,
                             best <= (1 + Fraction(4, m)) * opt.cost))
        checks.append(_check("k-restricted", f"{trial}/m={m}/sum", sum(decomp.costs), (m + 4) * opt.cost,
                             sum(decomp.costs) <= (m + 4) * opt.cost))
        feasible = all(restricted_tree_feasible(tree, opt.terminals, 2 ** m) for tree in decomp.trees)
        small = all(len(c.terminals) <= 2 ** m and c.expanded_leaves <= 2 ** m for tree in decomp.trees for c in tree)
        checks.append(_check("k-restricted", f"{trial}/m={m}/feasible", int(feasible and small), 1,
                             feasible and small))
        once = all(count == 1 for count in intermediate_leaf_counts(decomp).values())
        checks.append(_check("k-restricted", f"{trial}/m={m}/intermediate-once", int(once), 1, once))
    return checks


def _small_ca(rng, seed, max_terminals):
    for attempt in range(50):
        graph, links = gen_random_one_node_cap(int(rng.integers(4, 9)), int(rng.integers(1, 5)),
                                               seed * 1000 + attempt, max_links=8)
        inst, _ = reduce_one_node_cap(graph, links)
        if inst is not None and 2 <= len(inst.terminals) <= max_terminals:
            return inst
    return None


def trial_lp(trial, seed, max_terminals=8):
    rng = np.random.default_rng(seed + trial)
    inst = _small_ca(rng, seed + trial, max_terminals)
    if inst is None:
        return [_check("lp", f"{trial}/instance", 0, 1, False)]
    opt = brute_force_opt(inst).cost
    k = len(inst.terminals)
    lp, value = solve_lp(inst, k)
    checks = [_check("lp", f"{trial}/lp-below-opt", float(value), opt, float(value) <= opt + LP_TOL, LP_TOL)]
    if k <= 6:
        root = min(inst.terminals)
        components = enumerate_components(inst, k, root)
        x = rng.random(len(components)) * rng.choice([0.1, 0.5, 1.0])
        violation = separate(components, x, root)
        oracle = enumerate_cuts_oracle(components, x, root)
        agree = (violation is None) == (not oracle)
        if violation is not None:
            agree &= violation.cut in {cut for cut, _ in oracle}
        checks.append(_check("lp", f"{trial}/separation", int(agree), 1, agree))
    return checks


def trial_rounding(trial, seed):
    rng = np.random.default_rng(seed + trial)
    graph, links = gen_random_one_node_cap(int(rng.integers(4, 11)), int(rng.integers(1, 6)), seed + trial,
                                           max_links=8)
    result = solve_pipeline(graph, links, DEFAULT_K, seed + trial)
    checks = [_check("rounding", f"{trial}/feasible", int(result.feasible), 1, result.feasible)]
    if result.opt:
        checks.append(_check("rounding", f"{trial}/ratio", result.cost / result.opt, 1,
                             result.cost >= result.opt))
    return checks


def trial_structural(trial, seed):
    checks = []
    if trial == 0:
        p = psi_argmax(50)
        checks.append(_check("structural", "psi/argmax", p, 4, p == 4))
        checks.append(_check("structural", "psi/max", psi(4), Fraction(227, 120), psi(4) == Fraction(227, 120)))
        value, ok = invariant_base_case()
        checks.append(_check("structural", "invariant/base-case", value, GAMMA_BOUND, ok))
        checks.append(_check("structural", "harmonic/concavity", 1, 1, harmonic_concavity_holds(50)))
    rng = np.random.default_rng(seed + trial)
    tree = gen_random_binary_tree(int(rng.integers(1, 32)), seed + trial)
    disjoint = leaf_map_disjoint(tree, leaf_map(tree))
    checks.append(_check("structural", f"{trial}/leaf-map", int(disjoint), 1, disjoint))
    excess, leaves = high_degree_excess(tree)
    checks.append(_check("structural", f"{trial}/degree-excess", excess, leaves, excess <= leaves))
    inst = gen_random_tree_instance(int(rng.integers(1, 15)), seed + trial)
    opt = brute_force_opt(inst)
    checks.append(_check("structural", f"{trial}/opt-lower-bound", opt.cost, Fraction(len(inst.terminals), 2),
                         lower_bound_holds(inst, opt.cost)))
    return checks


TRIALS = {
    "bounds": trial_bounds,
    "path-family": trial_path_family,
    "leaf-adjacent": trial_leaf_adjacent,
    "reductions": trial_reductions,
    "k-restricted": trial_k_restricted,
    "lp": trial_lp,
    "rounding": trial_rounding,
    "structural": trial_structural,
}


def _run_trial(job):
    suite, trial, seed, options = job
    if suite == "lp" and options.get("max_terminals"):
        return trial_lp(trial, seed, options["max_terminals"])
    return TRIALS[suite](trial, seed)


def _stats(suite, checks):
    if suite == "rounding":
        ratios = [float(c.value) for c in checks if c.name.endswith("/ratio")]
        stats = summary_stats(ratios)
        return stats, [_check("rounding", "mean-ratio", stats.get("mean", 0.0), ROUNDING_RATIO_CEILING,
                              stats.get("mean", 0.0) <= ROUNDING_RATIO_CEILING)]
    if suite in ("bounds", "leaf-adjacent"):
        return summary_stats([float(c.value) for c in checks if c.name.endswith("h-average")]), []
    return {}, []


def run_suite(suite, trials=None, seed=0, jobs=1, progress=True, max_terminals=None):
    if suite not in TRIALS:
        raise KeyError(f"unknown suite {suite!r}")
    trials = DEFAULT_TRIALS[suite] if trials is None else trials
    if suite == "path-family":
        trials = min(trials, 49)
    start = time.time()
    jobs_list = [(suite, trial, seed, {"max_terminals": max_terminals}) for trial in range(trials)]
    bar = pyprind.ProgBar(trials, stream=2, title=f"suite {suite}") if progress and trials else None
    checks = []
    if jobs > 1:
        with Pool(jobs) as pool:
            for found in pool.imap(_run_trial, jobs_list):
                checks.extend(found)
                if bar is not None:
                    bar.update()
    else:
        for job in jobs_list:
            checks.extend(_run_trial(job))
            if bar is not None:
                bar.update()
    stats, extra = _stats(suite, checks)
    checks.extend(extra)
    runtime = time.time() - start
    passed = all(c.passed for c in checks)
    for c in checks:
        if not c.passed:
            logger.warning("%s: check %s failed (value %s, bound %s)", suite, c.name, c.value, c.bound)
    if wandb.run is not None:
        wandb.log({f"{suite}/passed": int(passed), f"{suite}/checks": len(checks), f"{suite}/runtime": runtime,
                   **{f"{suite}/{key}": value for key, value in stats.items()}})
    logger.info("suite %s: %d checks, %s in %.1fs", suite, len(checks), "passed" if passed else "FAILED", runtime)
    return SuiteResult(suite, checks, passed, stats, runtime)


def run_suites(names, trials=None, seed=0, jobs=1, progress=True, max_terminals=None):
    names = SUITES if "all" in names else names
    results = [run_suite(name, trials, seed, jobs, progress, max_terminals) for name in names]
    if wandb.run is not None:
        wandb.run.summary["passed"] = int(all(r.passed for r in results))
    return results


def check_to_dict(check):
    record = check._asdict()
    for key in ("value", "bound"):
        if isinstance(record[key], Fraction):
            record[key + "_float"] = float(record[key])
            record[key] = f"{record[key].numerator}/{record[key].denominator}"
    return record


def results_to_dict(results):
    return {
        "passed": all(r.passed for r in results),
        "suites": [{"suite": r.suite, "passed": r.passed, "runtime": r.runtime, "stats": r.stats,
                    "failed": [check_to_dict(c) for c in r.checks if not c.passed],
                    "checks": [check_to_dict(c) for c in r.checks]} for r in results],
    }


def failed_checks(results):
    return list(itertools.chain.from_iterable((c for c in r.checks if not c.passed) for r in results))
