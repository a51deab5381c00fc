import json
import logging
import os
import sys
from fractions import Fraction

import numpy as np
import wandb

from src.graphs import PreconditionError, UndirGraph
from src.instances import Instance
from src.lp import CUT_TOL, EXACT_MAX_COLUMNS, MAX_CUTS
from src.reductions import LinkSet
from src.rounding import DEFAULT_K
from src.simplex import PIVOT_TOL
from src.steiner import BRUTE_CAP, ENUM_CAP, EXACT_CAP
from src.witness import DELTA, GAMMA_BOUND, PRUFER_CAP

FORMAT_VERSION = 1
INSTANCE_KINDS = ("ca", "block-tap", "one-node-cap", "cacap")
ROLES = ("terminal", "steiner", "plain")
SEED_ENV = "AUGUR_SEED"


def default_seed():
    try:
        return int(os.environ.get(SEED_ENV, 0))
    except ValueError:
        raise PreconditionError(f"{SEED_ENV} must be an integer")


def set_config(args):
    config = {"steiner": {}, "lp": {}, "rounding": {}, "witness": {}, "verify": {}, "run": {}}
    config["steiner"]["exact_cap"] = getattr(args, "exact_cap", EXACT_CAP)
    config["steiner"]["enum_cap"] = getattr(args, "enum_cap", ENUM_CAP)
    config["steiner"]["brute_cap"] = BRUTE_CAP
    config["lp"]["tol"] = getattr(args, "tol", CUT_TOL)
    config["lp"]["pivot_tol"] = getattr(args, "pivot_tol", PIVOT_TOL)
    config["lp"]["max_cuts"] = getattr(args, "max_cuts", MAX_CUTS)
    config["lp"]["exact"] = bool(getattr(args, "exact", False))
    config["lp"]["exact_max_columns"] = EXACT_MAX_COLUMNS
    config["rounding"]["k"] = getattr(args, "k", DEFAULT_K)
    config["rounding"]["seed"] = getattr(args, "seed", 0)
    config["witness"]["bound"] = GAMMA_BOUND
    config["witness"]["delta"] = DELTA
    config["witness"]["prufer_cap"] = PRUFER_CAP
    config["verify"]["trials"] = getattr(args, "trials", None)
    config["verify"]["jobs"] = getattr(args, "jobs", 1)
    config["verify"]["max_terminals"] = getattr(args, "max_terminals", None)
    config["run"]["json"] = bool(getattr(args, "json", False))
    config["run"]["quiet"] = bool(getattr(args, "quiet", False))
    return config


def fraction_str(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def rational_record(x):
    return {"value": fraction_str(x), "float": float(x)}


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2, default=_default)


def _default(obj):
    if isinstance(obj, Fraction):
        return rational_record(obj)
    if isinstance(obj, (frozenset, set)):
        return sorted(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def summary_stats(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return {"count": 0}
    return {"count": int(values.size), "mean": float(values.mean()), "std": float(values.std()),
            "min": float(values.min()), "max": float(values.max()), "median": float(np.median(values))}


def instance_to_dict(instance):
    if instance.kind not in INSTANCE_KINDS:
        raise PreconditionError(f"unknown instance kind {instance.kind!r}")
    terminals = set(instance.terminals)
    nodes = []
    for v in instance.graph.nodes:
        if instance.kind == "ca":
            role = "terminal" if v in terminals else "steiner"
        else:
            role = "plain"
        nodes.append({"id": v, "label": instance.graph.label(v), "role": role})
    return {
        "format_version": FORMAT_VERSION,
        "kind": instance.kind,
        "nodes": nodes,
        "edges": [list(e) for e in instance.graph.edges],
        "links": [list(e) for e in (instance.links or ())],
        "terminals": sorted(terminals),
        "metadata": dict(instance.metadata or {}),
    }


def instance_from_dict(doc):
    if not isinstance(doc, dict):
        raise PreconditionError("instance document must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise PreconditionError(f"unsupported format_version {doc.get('format_version')!r}")
    kind = doc.get("kind")
    if kind not in INSTANCE_KINDS:
        raise PreconditionError(f"unknown instance kind {kind!r}")
    nodes = doc.get("nodes", [])
    ids = [node.get("id") for node in nodes]
    if sorted(ids) != list(range(len(ids))):
        raise PreconditionError("node ids must be dense integers starting at 0")
    roles = {node["id"]: node.get("role", "plain") for node in nodes}
    bad = sorted(v for v, role in roles.items() if role not in ROLES)
    if bad:
        raise PreconditionError(f"nodes {bad} have an unknown role")
    known = set(ids)
    pairs = []
    for field in ("edges", "links"):
        pairs.append([])
        for e in doc.get(field, []):
            if len(e) != 2 or e[0] not in known or e[1] not in known:
                raise PreconditionError(f"{field} entry {e} references unknown ids")
            pairs[-1].append((int(e[0]), int(e[1])))
    edges, links = pairs
    terminals = sorted(doc.get("terminals", []))
    if kind == "ca":
        marked = sorted(v for v, role in roles.items() if role == "terminal")
        if marked != terminals:
            raise PreconditionError("terminal list disagrees with node roles")
        if any(role == "plain" for role in roles.values()):
            raise PreconditionError("CA instance nodes must be terminals or Steiner nodes")
    elif terminals:
        raise PreconditionError(f"{kind} instances carry no terminals")
    graph = UndirGraph(ids, edges, {node["id"]: node.get("label", node["id"]) for node in nodes})
    return Instance(kind, graph, LinkSet(links) if kind != "ca" else None, tuple(terminals),
                    doc.get("metadata", {}))


def save_instance(instance, path=None):
    text = json.dumps(instance_to_dict(instance), sort_keys=True)
    if path is None or path == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as f:
            f.write(text + "\n")
    return text


def load_instance(path):
    try:
        if path == "-":
            doc = json.load(sys.stdin)
        else:
            with open(path) as f:
                doc = json.load(f)
    except json.JSONDecodeError as e:
        raise PreconditionError(f"{path} is not valid JSON: {e}")
    return instance_from_dict(doc)


def configure_logging(args):
    level = logging.INFO
    if getattr(args, "quiet", False):
        level = logging.WARNING
    elif getattr(args, "verbose", False):
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)


def loggable(args):
    return {key: value for key, value in vars(args).items() if not callable(value)}


def init_wandb(args, exp_name):
    if not args.log_wandb:
        wandb.init(mode="disabled")
    elif args.public:
        wandb.init(
            anonymous="allow",
            group=args.group or None,
            name=exp_name,
            config=loggable(args),
            tags=[args.tag] if args.tag else None, dir=args.wandb_dir or None
        )
    else:
        wandb.init(
            project=args.project,
            group=args.group or None,
            entity=args.entity or None,
            name=exp_name,
            config=loggable(args),
            tags=[args.tag] if args.tag else None, dir=args.wandb_dir or None
        )
    wandb.config.update(loggable(args), allow_val_change=True)
