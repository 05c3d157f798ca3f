"""Command-line drivers: complete, predict, verify, experiment.

Commands speak either human-readable lines or line-delimited JSON records
with stable field names (``--format jsonl``), and every run starts by
echoing its full effective configuration so it can be reproduced.  Exit
codes: 0 success, 1 property or convergence failure, 2 input error.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import support as _support
from .canonical_scaling import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_SWEEPS,
    ConvergenceReport,
    ScalingFamily,
    ScalingState,
    csa,
    sweep,
)
from .completion import CompletionConfig, CompletionModel, round_to_scale, tca
from .errors import (
    CapacityError,
    ConvergenceError,
    IngestError,
    OrderingSpecError,
    UnknownIdError,
)
from .ingest import IdMap, Schema, idmap_from_dict, idmap_to_dict, parse_ratings
from .lcsp_oracle import SIZE_CAP, build_constraints, oracle_complete, solve_lcsp
from .properties import (
    OrderingSpec,
    check_consensus_ordering,
    check_gauge_uniqueness,
    check_scale_fairness,
    check_unit_consistency,
    find_consensus_sets,
)
from .sparse_tensor import SparseTensor, SubtensorId

MODEL_FORMAT = "uctensor-model"
MODEL_VERSION = 1

ALL_PROPERTIES = (
    "full_support",
    "unit_consistency",
    "gauge_uniqueness",
    "scale_fairness",
    "consensus_ordering",
    "oracle_equivalence",
)


@dataclass
class RunConfig:
    """Effective settings of one command invocation."""

    k: int | None = None
    epsilon: float = DEFAULT_EPSILON
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    seed: int = 0
    fmt: str = "human"
    oracle_cap: int = 500
    missing_cap: int = 20_000

    def as_record(self, command: str, **extra) -> dict:
        rec = {
            "record": "config",
            "command": command,
            "k": self.k,
            "epsilon": self.epsilon,
            "max_sweeps": self.max_sweeps,
            "seed": self.seed,
            "format": self.fmt,
            "oracle_cap": self.oracle_cap,
            "missing_cap": self.missing_cap,
        }
        rec.update(extra)
        return rec


class Emitter:
    """Writes records as human lines or JSON lines."""

    def __init__(self, fmt: str, out=None):
        if fmt not in ("human", "jsonl"):
            raise ValueError(f"unknown format {fmt!r}")
        self.fmt = fmt
        self.out = out if out is not None else sys.stdout

    def emit(self, rec: dict) -> None:
        if self.fmt == "jsonl":
            self.out.write(json.dumps(rec, sort_keys=True) + "\n")
            return
        kind = rec.get("record", "info")
        if kind == "config":
            pairs = ", ".join(
                f"{k}={v}" for k, v in rec.items() if k not in ("record", "command")
            )
            self.out.write(f"[{rec.get('command')}] config: {pairs}\n")
        elif kind == "convergence":
            status = "converged" if rec["converged"] else "DID NOT CONVERGE"
            self.out.write(
                f"{status} in {rec['sweeps']} sweeps (final v={rec['final_v']:.3e})\n"
            )
        elif kind == "prediction":
            ids = ",".join(rec["ids"])
            line = f"{ids} -> {rec['raw']!r}"
            if rec.get("rounded") is not None:
                line += f" (rounded {rec['rounded']})"
            if rec.get("known"):
                line += " [known]"
            self.out.write(line + "\n")
        elif kind == "property":
            tag = "PASS" if rec["passed"] else "FAIL"
            if rec.get("informational"):
                tag = "INFO"
            line = (
                f"{tag} {rec['name']}: max deviation {rec['max_deviation']:.3e} "
                f"({rec['instances']} instances)"
            )
            if rec["violations"]:
                line += f"; {len(rec['violations'])} violations; first: {rec['violations'][0]}"
            for note in rec.get("notes", ()):
                line += f"\n  note: {note}"
            self.out.write(line + "\n")
        elif kind == "error":
            self.out.write(f"error: {rec['message']}\n")
        elif kind == "warning":
            self.out.write(f"warning: {rec['message']}\n")
        else:
            pairs = ", ".join(f"{k}={v}" for k, v in rec.items() if k != "record")
            self.out.write(f"{kind}: {pairs}\n")


# -- schema / input helpers -------------------------------------------------


def schema_from_args(args) -> Schema:
    roles = [r.strip().lower() for r in args.schema.split(",")]
    key_columns = tuple(i for i, r in enumerate(roles) if r == "key")
    value_columns = [i for i, r in enumerate(roles) if r == "value"]
    bad = [r for r in roles if r not in ("key", "value")]
    if bad or len(value_columns) != 1 or len(key_columns) < 2:
        raise IngestError(
            f"--schema must list 'key' columns (>=2) and exactly one 'value', got {args.schema!r}"
        )
    transform = None
    if args.transform:
        try:
            a, b = (float(p) for p in args.transform.split(","))
        except ValueError:
            raise IngestError(
                f"--transform expects 'a,b', got {args.transform!r}"
            ) from None
        transform = (a, b)
    return Schema(
        key_columns=key_columns,
        value_column=value_columns[0],
        delimiter=args.delimiter,
        header=args.header,
        transform=transform,
    )


def load_ratings(path: str, schema: Schema, dedupe: str | None):
    with open(path, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    tensor, idmap = parse_ratings(io.StringIO(raw.decode("utf-8")), schema, dedupe)
    return tensor, idmap, digest


# -- model artifact ---------------------------------------------------------


def save_model(path: str, model: CompletionModel, idmap: IdMap, digest: str) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "k": model.k,
        "extents": list(model.source.extents),
        "epsilon": model.report.epsilon,
        "max_sweeps": model.config.max_sweeps,
        "sweeps": model.report.sweeps,
        "converged": model.report.converged,
        "v_trace": model.report.v_trace,
        "source_digest": digest,
        "entries": [
            [list(idx), model.source.entries[idx]]
            for idx in model.source.known_indices()
        ],
        "log_coeffs": [
            {"dims": list(sid.fixed_dims), "coords": list(sid.fixed_coords), "s": val}
            for sid, val in sorted(model.scaling.log_coeffs.items())
        ],
        "idmap": idmap_to_dict(idmap),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> tuple[CompletionModel, IdMap, str]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT or payload.get("version") != MODEL_VERSION:
        raise ValueError(f"{path} is not a version-{MODEL_VERSION} {MODEL_FORMAT} file")
    extents = tuple(int(n) for n in payload["extents"])
    tensor = SparseTensor(
        extents, {tuple(int(c) for c in idx): float(v) for idx, v in payload["entries"]}
    )
    coeffs = {
        SubtensorId(tuple(int(d) for d in row["dims"]), tuple(int(c) for c in row["coords"])): float(row["s"])
        for row in payload["log_coeffs"]
    }
    family = ScalingFamily(int(payload["k"]), coeffs)
    report = ConvergenceReport(
        sweeps=int(payload["sweeps"]),
        v_trace=[float(v) for v in payload["v_trace"]],
        epsilon=float(payload["epsilon"]),
        converged=bool(payload["converged"]),
    )
    config = CompletionConfig(
        epsilon=float(payload["epsilon"]), max_sweeps=int(payload["max_sweeps"])
    )
    model = CompletionModel(tensor, family, report, int(payload["k"]), config)
    idmap = idmap_from_dict(payload["idmap"])
    return model, idmap, payload["source_digest"]


# -- subcommands ------------------------------------------------------------


def cmd_complete(args) -> int:
    emitter = Emitter(args.format)
    config = RunConfig(
        k=args.k, epsilon=args.epsilon, max_sweeps=args.max_sweeps,
        seed=args.seed, fmt=args.format,
    )
    try:
        schema = schema_from_args(args)
        tensor, idmap, digest = load_ratings(args.ratings, schema, args.dedupe)
    except (IngestError, OSError) as exc:
        emitter.emit({"record": "error", "message": str(exc)})
        return 2
    k = args.k if args.k is not None else tensor.d - 1
    emitter.emit(config.as_record(
        "complete", ratings=args.ratings, output=args.output,
        extents=list(tensor.extents), known=len(tensor), effective_k=k,
        source_digest=digest,
    ))
    started = time.perf_counter()
    try:
        model = tca(tensor, k, CompletionConfig(args.epsilon, args.max_sweeps))
    except ConvergenceError as exc:
        report = exc.report
        emitter.emit({
            "record": "convergence", "converged": False, "sweeps": report.sweeps,
            "final_v": report.v_trace[-1], "epsilon": report.epsilon,
        })
        return 1
    except ValueError as exc:
        emitter.emit({"record": "error", "message": str(exc)})
        return 2
    elapsed = time.perf_counter() - started
    save_model(args.output, model, idmap, digest)
    emitter.emit({
        "record": "convergence", "converged": True, "sweeps": model.report.sweeps,
        "final_v": model.report.v_trace[-1], "epsilon": model.report.epsilon,
        "seconds": round(elapsed, 6), "model": args.output,
    })
    return 0


def cmd_predict(args) -> int:
    emitter = Emitter(args.format)
    try:
        model, idmap, digest = load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        emitter.emit({"record": "error", "message": f"cannot load model: {exc}"})
        return 2
    bounds = None
    if args.round:
        try:
            lo, hi = (float(p) for p in args.round.split(","))
            bounds = (lo, hi)
        except ValueError:
            emitter.emit({"record": "error", "message": f"--round expects 'lo,hi', got {args.round!r}"})
            return 2
    emitter.emit(RunConfig(
        k=model.k, epsilon=model.report.epsilon, max_sweeps=model.config.max_sweeps,
        seed=args.seed, fmt=args.format,
    ).as_record("predict", model=args.model, source_digest=digest, all=args.all))

    queries: list[tuple[str, ...]] = []
    if args.all:
        if model.source.box_size > model.config.complete_all_cap:
            emitter.emit({
                "record": "error",
                "message": (
                    f"extent box has {model.source.box_size} cells, above the "
                    f"cap {model.config.complete_all_cap}; query per cell instead"
                ),
            })
            return 2
        for idx in model.source.missing_indices():
            queries.append(idmap.unresolve(idx))
    for q in args.queries:
        queries.append(tuple(p.strip() for p in q.split(args.delimiter)))

    successes = 0
    for ids in queries:
        try:
            idx = idmap.resolve(ids)
            raw = model.predict(idx)
        except (UnknownIdError, ValueError, IndexError) as exc:
            emitter.emit({
                "record": "error", "query": list(ids), "message": str(exc),
            })
            continue
        successes += 1
        rec = {
            "record": "prediction",
            "ids": list(ids),
            "raw": raw,
            "known": idx in model.source.entries,
        }
        if bounds is not None:
            rec["rounded"] = round_to_scale(raw, *bounds)
        emitter.emit(rec)
    if not queries:
        emitter.emit({"record": "warning", "message": "no queries given"})
        return 0
    return 0 if successes else 2


def _parse_consensus_spec(text: str, tensor: SparseTensor, idmap: IdMap) -> OrderingSpec:
    """Parse 'dim:id1,id2,...' into an ordering spec, ids in ascending
    preference; the common support is declared from the first slice."""
    try:
        dim_part, gamma_part = text.split(":", 1)
        dim = int(dim_part)
    except ValueError:
        raise IngestError(
            f"--consensus-spec expects 'dim:id1,id2,...', got {text!r}"
        ) from None
    if not 1 <= dim <= tensor.d:
        raise IngestError(f"--consensus-spec dimension {dim} out of range")
    gamma = []
    for token in gamma_part.split(","):
        coord = idmap.to_coord[dim - 1].get(token.strip())
        if coord is None:
            raise IngestError(
                f"--consensus-spec id {token.strip()!r} unknown in dimension {dim}"
            )
        gamma.append(coord)
    support = frozenset(
        idx[: dim - 1] + idx[dim:]
        for idx in tensor.entries
        if idx[dim - 1] == gamma[0]
    )
    return OrderingSpec(dim, tuple(gamma), support)


def _verify_oracle(tensor, k, emitter, config) -> dict | None:
    """Direct-solve cross-check; None when the instance is over the cap."""
    n_rows = sum(int((g.counts > 0).sum()) for g in tensor.groups(k))
    if len(tensor) > config.oracle_cap or n_rows > SIZE_CAP:
        emitter.emit({
            "record": "warning",
            "message": (
                f"oracle checks skipped: {len(tensor)} known entries over cap "
                f"{config.oracle_cap}"
            ),
        })
        return None
    system = build_constraints(tensor, k)
    x, s = solve_lcsp(tensor, k, system)
    canonical, family, report = csa(tensor, k, config.epsilon, config.max_sweeps)
    dev_canonical = float(np.abs(np.log(canonical.values_array()) - x).max())
    model = CompletionModel(tensor, family, report, k)
    dev_pred = 0.0
    checked = 0
    for idx in tensor.missing_indices():
        if checked >= config.missing_cap:
            break
        if _support.witness(tensor, idx) is None:
            continue
        checked += 1
        reference = oracle_complete(tensor, k, idx, presolved=(system, s))
        dev_pred = max(dev_pred, abs(model.predict(idx) / reference - 1.0))
    violations = []
    if dev_canonical > 1e-8:
        violations.append(f"canonical log values diverge from projection: {dev_canonical:.3e}")
    if dev_pred > 1e-6:
        violations.append(f"predictions diverge from direct solve: {dev_pred:.3e}")
    return {
        "record": "property",
        "name": "oracle_equivalence",
        "instances": checked,
        "max_deviation": max(dev_canonical, dev_pred),
        "violations": violations,
        "passed": not violations,
        "tolerance": 1e-8,
        "seed": None,
        "informational": False,
        "notes": [],
    }


def cmd_verify(args) -> int:
    emitter = Emitter(args.format)
    config = RunConfig(
        k=args.k, epsilon=args.epsilon, max_sweeps=args.max_sweeps,
        seed=args.seed, fmt=args.format, oracle_cap=args.oracle_cap,
    )
    try:
        schema = schema_from_args(args)
        tensor, idmap, digest = load_ratings(args.ratings, schema, args.dedupe)
    except (IngestError, OSError) as exc:
        emitter.emit({"record": "error", "message": str(exc)})
        return 2
    k = args.k if args.k is not None else tensor.d - 1
    wanted = [p.strip() for p in args.properties.split(",")] if args.properties else list(ALL_PROPERTIES)
    unknown = [p for p in wanted if p not in ALL_PROPERTIES]
    if unknown:
        emitter.emit({"record": "error", "message": f"unknown properties: {unknown}"})
        return 2
    try:
        declared_specs = [
            _parse_consensus_spec(text, tensor, idmap)
            for text in (args.consensus_spec or [])
        ]
    except IngestError as exc:
        emitter.emit({"record": "error", "message": str(exc)})
        return 2
    emitter.emit(config.as_record(
        "verify", ratings=args.ratings, effective_k=k, properties=wanted,
        extents=list(tensor.extents), known=len(tensor), source_digest=digest,
    ))

    fully_supported = None
    spec_error = False
    reports: list[dict] = []
    for name in wanted:
        if name == "full_support":
            try:
                ok, failures = _support.is_fully_supported(tensor)
            except CapacityError as exc:
                emitter.emit({"record": "warning", "message": str(exc)})
                continue
            fully_supported = ok
            reports.append({
                "record": "property", "name": "full_support",
                "instances": tensor.box_size - len(tensor),
                "max_deviation": 0.0,
                "violations": [],
                "passed": True,
                "tolerance": None, "seed": None,
                "informational": True,
                "notes": [
                    f"{len(failures)} unsupported missing indices"
                    + (f"; first {failures[0]}" if failures else "")
                ],
            })
        elif name == "unit_consistency":
            rep = check_unit_consistency(
                tensor, k, trials=args.trials, seed=args.seed,
                missing_cap=config.missing_cap, supported_only=True,
            )
            reports.append(rep.as_dict())
        elif name == "gauge_uniqueness":
            rep = check_gauge_uniqueness(
                tensor, k, orderings=args.orderings, seed=args.seed,
                missing_cap=config.missing_cap,
            )
            if fully_supported is False:
                rep.informational = True
                rep.notes.append("tensor lacks full support; result is informational")
            reports.append(rep.as_dict())
        elif name == "scale_fairness":
            first_dim_occupied = sorted({idx[0] for idx in tensor.entries})
            rep = check_scale_fairness(
                tensor, dim=1, slice_index=first_dim_occupied[0], factor=args.factor,
            )
            reports.append(rep.as_dict())
        elif name == "consensus_ordering":
            model = tca(tensor, k, CompletionConfig(args.epsilon, args.max_sweeps))
            if declared_specs:
                specs = declared_specs
            else:
                specs = []
                for dim in range(1, tensor.d + 1):
                    specs.extend(find_consensus_sets(tensor, dim, min_size=2))
            if not specs:
                reports.append({
                    "record": "property", "name": "consensus_ordering",
                    "instances": 0, "max_deviation": 0.0, "violations": [],
                    "passed": True, "tolerance": 0.0, "seed": None,
                    "informational": False,
                    "notes": ["no unanimously ordered slice sets found; vacuous"],
                })
            for ospec in specs:
                try:
                    rep = check_consensus_ordering(model, ospec)
                except OrderingSpecError as exc:
                    # a bad declaration is an input problem, not a failed property
                    spec_error = True
                    emitter.emit({
                        "record": "error",
                        "message": f"ordering spec invalid ({exc.clause} clause): {exc}",
                        "clause": exc.clause,
                    })
                    continue
                d = rep.as_dict()
                d["notes"].append(
                    f"dim {ospec.dim}, slices {list(ospec.gamma)}"
                )
                reports.append(d)
        elif name == "oracle_equivalence":
            rep = _verify_oracle(tensor, k, emitter, config)
            if rep is not None:
                reports.append(rep)

    failed = False
    for rep in reports:
        emitter.emit(rep)
        if not rep["passed"] and not rep.get("informational"):
            failed = True
    if failed:
        return 1
    return 2 if spec_error else 0


# -- experiments ------------------------------------------------------------


def _random_full_support_matrix(rng, rows, cols, density):
    from .support import is_fully_supported

    while True:
        entries = {}
        for i in range(1, rows + 1):
            for j in range(1, cols + 1):
                if rng.random() < density:
                    entries[(i, j)] = float(np.exp(rng.uniform(-1.0, 1.0)))
        if not entries:
            continue
        tensor = SparseTensor((rows, cols), entries)
        ok, _ = is_fully_supported(tensor)
        if ok:
            return tensor


def experiment_consensus(
    users: int = 50,
    base_products: int = 40,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> tuple[dict, list[tuple]]:
    """Planted unanimous ranking: half the users rate three extra products
    3 > 2 > 1; control users' predictions must reproduce that order."""
    rng = np.random.default_rng(seed)
    raters = users // 2
    cols = base_products + 3
    entries = {}
    for u in range(1, users + 1):
        for p in range(1, base_products + 1):
            entries[(u, p)] = float(rng.uniform(1.0, 5.0))
    best, mid, worst = base_products + 1, base_products + 2, base_products + 3
    for u in range(1, raters + 1):
        entries[(u, best)] = 3.0
        entries[(u, mid)] = 2.0
        entries[(u, worst)] = 1.0
    tensor = SparseTensor((users, cols), entries)
    model = tca(tensor, 1, CompletionConfig(epsilon, max_sweeps))
    spec = OrderingSpec(
        dim=2,
        gamma=(worst, mid, best),
        common_support=frozenset((u,) for u in range(1, raters + 1)),
    )
    report = check_consensus_ordering(model, spec)
    rows = []
    for u in range(raters + 1, users + 1):
        p_worst = model.predict((u, worst))
        p_mid = model.predict((u, mid))
        p_best = model.predict((u, best))
        rows.append((u, p_worst, p_mid, p_best, int(p_worst < p_mid < p_best)))
    summary = {
        "record": "experiment",
        "name": "consensus",
        "users": users,
        "products": cols,
        "raters": raters,
        "control_users": users - raters,
        "violations": len(report.violations),
        "max_deviation": report.max_deviation,
        "passed": report.passed,
        "seed": seed,
    }
    return summary, [("user", "pred_low", "pred_mid", "pred_high", "ordered")] + rows


def experiment_fairness(
    rows: int = 30,
    cols: int = 20,
    density: float = 0.5,
    user: int = 1,
    factor: float = 1.25,
    top_n: int = 10,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    tolerance: float = 1e-9,
) -> tuple[dict, list[tuple]]:
    """One user rescales all their ratings; nobody else's predictions or
    top-N lists may move."""
    rng = np.random.default_rng(seed)
    tensor = _random_full_support_matrix(rng, rows, cols, density)
    config = CompletionConfig(epsilon, max_sweeps)
    before = tca(tensor, 1, config)
    scaled = SparseTensor(
        tensor.extents,
        {
            idx: (val * factor if idx[0] == user else val)
            for idx, val in tensor.entries.items()
        },
    )
    after = tca(scaled, 1, config)

    changed_predictions = 0
    per_user_missing: dict[int, list[tuple[float, float, tuple]]] = {}
    for idx in tensor.missing_indices():
        if idx[0] == user:
            continue
        p1, p2 = before.predict(idx), after.predict(idx)
        if abs(p2 / p1 - 1.0) > tolerance:
            changed_predictions += 1
        per_user_missing.setdefault(idx[0], []).append((p1, p2, idx))

    changed_by_n = {n: 0 for n in range(1, top_n + 1)}
    for u, triples in sorted(per_user_missing.items()):
        order1 = [t[2] for t in sorted(triples, key=lambda t: (-t[0], t[2]))]
        order2 = [t[2] for t in sorted(triples, key=lambda t: (-t[1], t[2]))]
        for n in changed_by_n:
            if order1[:n] != order2[:n]:
                changed_by_n[n] += 1
    summary = {
        "record": "experiment",
        "name": "fairness",
        "rows": rows,
        "cols": cols,
        "known": len(tensor),
        "scaled_user": user,
        "factor": factor,
        "changed_predictions": changed_predictions,
        "changed_top_n_lists": changed_by_n[top_n],
        "passed": changed_predictions == 0 and all(v == 0 for v in changed_by_n.values()),
        "seed": seed,
    }
    data = [("top_n", "users_with_changed_list")]
    data.extend((n, changed_by_n[n]) for n in sorted(changed_by_n))
    return summary, data


def experiment_scaling(
    base_rows: int = 32,
    base_cols: int = 32,
    doublings: int = 5,
    sweeps_per_measure: int = 8,
    repeats: int = 5,
    seed: int = 0,
) -> tuple[dict, list[tuple]]:
    """Per-sweep wall time as the number of known entries doubles.

    Each size is timed ``repeats`` times and the minimum kept, which
    filters scheduler noise out of the small sizes.
    """
    rng = np.random.default_rng(seed)
    shapes = [(base_rows, base_cols)]
    for i in range(doublings):
        r, c = shapes[-1]
        shapes.append((r * 2, c) if i % 2 == 0 else (r, c * 2))
    data = [("entries", "sweeps", "wall_seconds", "per_sweep_seconds", "ratio_vs_previous")]
    prev = None
    max_ratio = 0.0
    for r, c in shapes:
        values = np.exp(rng.uniform(-1.0, 1.0, size=(r, c)))
        entries = {
            (i + 1, j + 1): float(values[i, j]) for i in range(r) for j in range(c)
        }
        tensor = SparseTensor((r, c), entries)
        best = float("inf")
        for _ in range(repeats):
            state = ScalingState(tensor, 1)
            started = time.perf_counter()
            for _ in range(sweeps_per_measure):
                sweep(state)
            best = min(best, time.perf_counter() - started)
        per_sweep = best / sweeps_per_measure
        ratio = per_sweep / prev if prev is not None else float("nan")
        if prev is not None:
            max_ratio = max(max_ratio, ratio)
        data.append((len(entries), sweeps_per_measure, best, per_sweep, ratio))
        prev = per_sweep
    summary = {
        "record": "experiment",
        "name": "scaling",
        "doublings": doublings,
        "max_ratio_per_doubling": max_ratio,
        "passed": max_ratio <= 2.5,
        "seed": seed,
    }
    return summary, data


def cmd_experiment(args) -> int:
    emitter = Emitter(args.format)
    config = RunConfig(
        epsilon=args.epsilon, max_sweeps=args.max_sweeps, seed=args.seed,
        fmt=args.format,
    )
    emitter.emit(config.as_record("experiment", name=args.name))
    if args.name == "consensus":
        summary, data = experiment_consensus(
            users=args.users, base_products=args.base_products, seed=args.seed,
            epsilon=args.epsilon, max_sweeps=args.max_sweeps,
        )
    elif args.name == "fairness":
        summary, data = experiment_fairness(
            rows=args.rows, cols=args.cols, density=args.density, user=args.user,
            factor=args.factor, top_n=args.top_n, seed=args.seed,
            epsilon=args.epsilon, max_sweeps=args.max_sweeps,
        )
    else:
        summary, data = experiment_scaling(
            base_rows=args.rows, base_cols=args.cols, doublings=args.doublings,
            sweeps_per_measure=args.sweeps_per_measure, seed=args.seed,
        )
    emitter.emit(summary)
    lines = ["\t".join(str(v) for v in row) for row in data]
    text = "\n".join(lines) + "\n"
    if args.data:
        with open(args.data, "w", encoding="utf-8") as fh:
            fh.write(text)
        emitter.emit({"record": "info", "data_file": args.data, "rows": len(data) - 1})
    elif args.format == "human":
        sys.stdout.write(text)
    else:
        header = data[0]
        for row in data[1:]:
            rec = {"record": "data", "experiment": args.name}
            rec.update({str(k): v for k, v in zip(header, row)})
            emitter.emit(rec)
    return 0 if summary["passed"] else 1


# -- argument parsing -------------------------------------------------------


def _add_schema_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--schema", default="key,key,value",
                   help="comma-separated column roles, e.g. key,key,value")
    p.add_argument("--delimiter", default=",", help="field delimiter ('::' accepted)")
    p.add_argument("--header", action="store_true", help="skip the first line")
    p.add_argument("--transform", default=None, metavar="a,b",
                   help="affine value transform a*value+b (result must be positive)")
    p.add_argument("--dedupe", default=None, choices=("last", "mean-log"),
                   help="duplicate-key policy; default is to error")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=None,
                   help="subtensor dimensionality (default d-1)")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--max-sweeps", type=int, default=DEFAULT_MAX_SWEEPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default="human", choices=("human", "jsonl"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uctensor",
        description="Unit-consistent completion of sparse positive rating tensors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", help="fit a completion model from a ratings file")
    p.add_argument("ratings")
    p.add_argument("-o", "--output", default="model.json")
    _add_schema_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("predict", help="query a saved model")
    p.add_argument("model")
    p.add_argument("queries", nargs="*",
                   help="queries as delimiter-joined external ids, e.g. u2,p2")
    p.add_argument("--all", action="store_true", help="predict every missing cell")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--round", default=None, metavar="lo,hi",
                   help="also emit the prediction rounded and clamped to [lo, hi]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default="human", choices=("human", "jsonl"))
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("verify", help="run property checks against a ratings file")
    p.add_argument("ratings")
    p.add_argument("--properties", default=None,
                   help=f"comma-separated subset of: {','.join(ALL_PROPERTIES)}")
    p.add_argument("--trials", type=int, default=20,
                   help="random scaling trials for unit consistency")
    p.add_argument("--orderings", type=int, default=5,
                   help="random sweep orders for gauge uniqueness")
    p.add_argument("--factor", type=float, default=1.25,
                   help="scale factor for the fairness check")
    p.add_argument("--oracle-cap", type=int, default=500,
                   help="max known entries for the direct-solve cross-check")
    p.add_argument("--consensus-spec", action="append", metavar="dim:id1,id2,...",
                   help="declare a unanimously ordered slice set to check "
                        "(ids in ascending preference); repeatable")
    _add_schema_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="run a synthetic experiment")
    p.add_argument("name", choices=("consensus", "fairness", "scaling"))
    p.add_argument("--users", type=int, default=50)
    p.add_argument("--base-products", type=int, default=40)
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--user", type=int, default=1)
    p.add_argument("--factor", type=float, default=1.25)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--doublings", type=int, default=5)
    p.add_argument("--sweeps-per-measure", type=int, default=8)
    p.add_argument("--data", default=None, help="write the plot-ready table here")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--max-sweeps", type=int, default=DEFAULT_MAX_SWEEPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default="human", choices=("human", "jsonl"))
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "experiment":
        if args.rows is None:
            args.rows = 30 if args.name == "fairness" else 32
        if args.cols is None:
            args.cols = 20 if args.name == "fairness" else 32
    return args.func(args)


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
