"""Scenario files: loading, validation, task execution and random generation.

A scenario is a JSON document. Numbers given as JSON integers or strings
(``"3/5"``, ``"0.25"``) are rationals; a JSON float anywhere in the numeric
content switches the whole scenario to floating point.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import _numeric as nm
from .credit import DefaultModel, kusuoka_verify
from .enlarge import DEFAULT_D_CAP, EnlargementScenario, multiplicity_report, theorem34_verify, theorem42_verify
from .errors import (
    CapExceeded,
    FiltrationLabError,
    HypothesisFailed,
    ParseError,
    ValidationError,
)
from .process import AdaptedProcess, doob_decomposition, is_martingale
from .report import VerificationReport, plain
from .representation import represent
from .semimart import minimal_martingale_measure, prp_transfer_check
from .space import FiniteProbSpace, Filtration, Partition, join

SCHEMA_VERSION = 1
TASKS = ("theorem34", "theorem42", "multiplicity", "kusuoka", "prp", "minimal_measure")
MAX_D = 6
MAX_ATOMS = 100_000


@dataclass
class Scenario:
    name: str
    space: FiniteProbSpace
    filtrations: dict
    processes: dict
    enlargement: EnlargementScenario | None = None
    market: tuple | None = None  # (filtration, driver)
    default: DefaultModel | None = None
    tasks: list = field(default_factory=list)
    digest: str = ""
    doc: dict = field(default_factory=dict, repr=False)


# ---------------------------------------------------------------------------
# parsing


def _number(x, where: str) -> Fraction | float:
    if isinstance(x, bool) or x is None:
        raise ValidationError(where, f"expected a number, got {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(where, f"cannot read {x!r} as a rational") from None
    raise ValidationError(where, f"expected a number, got {type(x).__name__}")


def _numbers_in(doc: dict):
    """Yield every numeric literal of the document that feeds arithmetic."""
    w = doc.get("weights")
    yield from (w.values() if isinstance(w, dict) else (w or []))
    for proc in (doc.get("processes") or {}).values():
        if isinstance(proc, dict):
            for rows in (proc.get("paths") or {}).values():
                yield from _flatten(rows)
            for row in proc.get("table") or []:
                if isinstance(row, dict):
                    for v in row.values():
                        yield from _flatten(v)
    dflt = doc.get("default") or {}
    for rows in (dflt.get("joint") or {}).values() if isinstance(dflt.get("joint"), dict) else []:
        yield from _flatten(rows)


def _flatten(v):
    if isinstance(v, list):
        for x in v:
            yield from _flatten(x)
    else:
        yield v


def _require(doc: dict, key: str, kind, where: str = ""):
    if key not in doc:
        raise ValidationError(f"{where}{key}", "missing")
    val = doc[key]
    if not isinstance(val, kind):
        raise ValidationError(f"{where}{key}", f"expected {getattr(kind, '__name__', kind)}")
    return val


def digest_of(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def parse_scenario(doc: dict, tol=None) -> Scenario:
    """Validate a decoded scenario document into domain objects."""
    if not isinstance(doc, dict):
        raise ValidationError("<root>", "a scenario must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError("schema_version", f"unsupported version {version!r}")
    outcomes = _require(doc, "outcomes", list)
    if not all(isinstance(o, str) for o in outcomes):
        raise ValidationError("outcomes", "labels must be strings")
    horizon = _require(doc, "horizon", int)
    if horizon < 1:
        raise ValidationError("horizon", "must be at least 1")
    exact = not any(isinstance(x, float) for x in _numbers_in(doc))

    def num(x, where):
        v = _number(x, where)
        return (v if isinstance(v, Fraction) else Fraction(v)) if exact else float(v)

    weights = doc.get("weights")
    if weights is None:
        weights = [Fraction(1, len(outcomes))] * len(outcomes)
    elif isinstance(weights, dict):
        extra = sorted(set(weights) - set(outcomes))
        if extra:
            raise ValidationError("weights", f"unknown outcomes {extra}")
        missing = [o for o in outcomes if o not in weights]
        if missing:
            raise ValidationError("weights", f"no weight for {missing}")
        weights = [num(weights[o], f"weights.{o}") for o in outcomes]
    elif isinstance(weights, list):
        if len(weights) != len(outcomes):
            raise ValidationError("weights", f"{len(weights)} weights for {len(outcomes)} outcomes")
        weights = [num(w, f"weights[{i}]") for i, w in enumerate(weights)]
    else:
        raise ValidationError("weights", "expected a list or an object")
    try:
        space = FiniteProbSpace(outcomes, weights, exact=exact, tol=tol)
    except FiltrationLabError as exc:
        raise ValidationError("weights", str(exc), exc.witness) from None

    filtrations = _parse_filtrations(doc, space, horizon)
    processes = _parse_processes(doc, space, filtrations, num)
    scn = Scenario(doc.get("name", ""), space, filtrations, processes, doc=doc, digest=digest_of(doc))

    if "enlargement" in doc:
        scn.enlargement = _parse_enlargement(doc["enlargement"], space, filtrations, processes)
    if "market" in doc:
        mk = doc["market"]
        f = _lookup(filtrations, mk.get("filtration"), "market.filtration")
        names = mk.get("processes") or []
        x = _stack_named(names, processes, "market.processes")
        scn.market = (f, _on(x, f, "market.processes"))
    if "default" in doc:
        scn.default = _parse_default(doc["default"], space, filtrations, processes, num, tol)
    tasks = doc.get("tasks", [])
    if not isinstance(tasks, list):
        raise ValidationError("tasks", "expected a list")
    scn.tasks = [_parse_task(t, i) for i, t in enumerate(tasks)]
    return scn


def _lookup(table: dict, key, where: str):
    if key not in table:
        raise ValidationError(where, f"unknown reference {key!r}")
    return table[key]


def _on(x: AdaptedProcess, f: Filtration, where: str) -> AdaptedProcess:
    try:
        return x.on(f)
    except FiltrationLabError as exc:
        raise ValidationError(where, str(exc), exc.witness) from None


def _stack_named(names, processes, where):
    if isinstance(names, str):
        names = [names]
    if not names:
        raise ValidationError(where, "at least one process is required")
    procs = [_lookup(processes, n, where) for n in names]
    if len(procs) == 1:
        return procs[0]
    try:
        out = AdaptedProcess.stack(procs, name="+".join(names))
    except FiltrationLabError as exc:
        raise ValidationError(where, str(exc), exc.witness) from None
    return out


def _parse_filtrations(doc, space, horizon) -> dict:
    specs = _require(doc, "filtrations", dict)
    out: dict = {}
    pending = dict(specs)
    while pending:
        progressed = False
        for name, spec in list(pending.items()):
            where = f"filtrations.{name}"
            if not isinstance(spec, dict):
                raise ValidationError(where, "expected an object")
            if "join" in spec:
                deps = spec["join"]
                if not isinstance(deps, list) or len(deps) < 2:
                    raise ValidationError(f"{where}.join", "expected a list of at least two names")
                unknown = [d for d in deps if d not in specs]
                if unknown:
                    raise ValidationError(f"{where}.join", f"unknown filtrations {unknown}")
                if not all(d in out for d in deps):
                    continue
                f = join(*[out[d] for d in deps])
                f.name = name
            elif "blocks" in spec:
                f = _blocks_filtration(spec["blocks"], space, horizon, where, name)
            elif "product" in spec:
                f = _product_filtration(spec["product"], space, horizon, where, name)
            else:
                raise ValidationError(where, "needs one of 'blocks', 'product', 'join'")
            out[name] = f
            del pending[name]
            progressed = True
        if not progressed:
            raise ValidationError("filtrations", f"circular joins among {sorted(pending)}")
    return {k: out[k] for k in specs}


def _make_filtration(parts, space, where, name) -> Filtration:
    try:
        return Filtration(space, parts, name=name)
    except FiltrationLabError as exc:
        raise ValidationError(where, str(exc), exc.witness) from None


def _blocks_filtration(blocks, space, horizon, where, name) -> Filtration:
    if not isinstance(blocks, list) or len(blocks) not in (horizon, horizon + 1):
        raise ValidationError(f"{where}.blocks", f"expected {horizon + 1} partitions (or {horizon} without time 0)")
    if len(blocks) == horizon:
        blocks = [[list(space.outcomes)]] + blocks
    parts = []
    for t, bl in enumerate(blocks):
        try:
            parts.append(Partition.from_blocks(space, bl))
        except (FiltrationLabError, KeyError) as exc:
            raise ValidationError(f"{where}.blocks[{t}]", f"time {t}: {exc}", {"t": t}) from None
    return _make_filtration(parts, space, where, name)


def _product_filtration(reveal, space, horizon, where, name) -> Filtration:
    """``reveal[t-1]`` lists the label character positions that become known at time t."""
    if not isinstance(reveal, list) or len(reveal) != horizon:
        raise ValidationError(f"{where}.product", f"expected {horizon} lists of positions")
    width = min(len(o) for o in space.outcomes)
    parts = [Partition.trivial(space)]
    known: list[int] = []
    for t, pos in enumerate(reveal, start=1):
        if not isinstance(pos, list) or not all(isinstance(p, int) and 0 <= p < width for p in pos):
            raise ValidationError(f"{where}.product[{t - 1}]", f"positions must be integers in 0..{width - 1}")
        known = known + pos
        parts.append(Partition(space, ["".join(o[p] for p in known) for o in space.outcomes]))
    return _make_filtration(parts, space, where, name)


def _parse_processes(doc, space, filtrations, num) -> dict:
    out = {}
    for name, spec in (doc.get("processes") or {}).items():
        where = f"processes.{name}"
        if not isinstance(spec, dict):
            raise ValidationError(where, "expected an object")
        f = _lookup(filtrations, spec.get("filtration"), f"{where}.filtration")
        dim = spec.get("dim", 1)
        if not isinstance(dim, int) or dim < 1:
            raise ValidationError(f"{where}.dim", "must be a positive integer")
        T = f.horizon
        vals = np.empty((T + 1, space.n, dim), dtype=object if space.exact else float)
        if "paths" in spec:
            paths = spec["paths"]
            missing = [o for o in space.outcomes if o not in paths]
            if missing:
                raise ValidationError(f"{where}.paths", f"no path for {missing[:3]}")
            for o, row in paths.items():
                if o not in space.index:
                    raise ValidationError(f"{where}.paths.{o}", "unknown outcome")
                if not isinstance(row, list) or len(row) != T + 1:
                    raise ValidationError(f"{where}.paths.{o}", f"expected {T + 1} values")
                for t, v in enumerate(row):
                    vals[t, space.index[o]] = _vector(v, dim, num, f"{where}.paths.{o}[{t}]")
        elif "table" in spec:
            table = spec["table"]
            if not isinstance(table, list) or len(table) != T + 1:
                raise ValidationError(f"{where}.table", f"expected {T + 1} time slices")
            for t, row in enumerate(table):
                part = f[t]
                seen = np.zeros(part.nblocks, dtype=bool)
                for o, v in row.items():
                    if o not in space.index:
                        raise ValidationError(f"{where}.table[{t}].{o}", "unknown outcome")
                    b = part.labels[space.index[o]]
                    vals[t, part.blocks[b]] = _vector(v, dim, num, f"{where}.table[{t}].{o}")
                    seen[b] = True
                if not seen.all():
                    b = int(np.flatnonzero(~seen)[0])
                    raise ValidationError(f"{where}.table[{t}]", f"no value for block {list(part.block_outcomes(b))}", {"t": t})
        else:
            raise ValidationError(where, "needs 'paths' or 'table'")
        try:
            out[name] = AdaptedProcess(f, vals, name=name)
        except FiltrationLabError as exc:
            raise ValidationError(where, str(exc), exc.witness) from None
    return out


def _vector(v, dim, num, where):
    if dim == 1 and not isinstance(v, list):
        return [num(v, where)]
    if not isinstance(v, list) or len(v) != dim:
        raise ValidationError(where, f"expected {dim} components")
    return [num(x, f"{where}[{i}]") for i, x in enumerate(v)]


def _parse_enlargement(spec, space, filtrations, processes) -> EnlargementScenario:
    if not isinstance(spec, dict):
        raise ValidationError("enlargement", "expected an object")
    names = spec.get("filtrations") or []
    drivers = spec.get("drivers") or []
    if len(names) < 2:
        raise ValidationError("enlargement.filtrations", "at least two filtrations are required")
    if len(drivers) != len(names):
        raise ValidationError("enlargement.drivers", "one driver entry per filtration is required")
    fs = [_lookup(filtrations, n, f"enlargement.filtrations[{i}]") for i, n in enumerate(names)]
    xs = [
        _on(_stack_named(d, processes, f"enlargement.drivers[{i}]"), f, f"enlargement.drivers[{i}]")
        for i, (d, f) in enumerate(zip(drivers, fs))
    ]
    try:
        return EnlargementScenario(space, fs, xs, names=[d if isinstance(d, str) else "+".join(d) for d in drivers])
    except (FiltrationLabError, ValueError) as exc:
        raise ValidationError("enlargement", str(exc)) from None


def _parse_default(spec, space, filtrations, processes, num, tol) -> DefaultModel:
    where = "default"
    if not isinstance(spec, dict):
        raise ValidationError(where, "expected an object")
    f = _lookup(filtrations, spec.get("market_filtration"), f"{where}.market_filtration")
    x = None
    if spec.get("market_processes"):
        x = _on(_stack_named(spec["market_processes"], processes, f"{where}.market_processes"), f, f"{where}.market_processes")
    theta = spec.get("theta")
    if not isinstance(theta, list) or not theta:
        raise ValidationError(f"{where}.theta", "expected a nonempty list")
    for i, th in enumerate(theta):
        if not (isinstance(th, int) and not isinstance(th, bool)) and th not in ("inf", "∞"):
            raise ValidationError(f"{where}.theta[{i}]", "default times are integers or 'inf'")
    joint = spec.get("joint")
    if not isinstance(joint, dict):
        raise ValidationError(f"{where}.joint", "expected an object keyed by outcome")
    table = []
    for o in space.outcomes:
        row = joint.get(o)
        if not isinstance(row, list) or len(row) != len(theta):
            raise ValidationError(f"{where}.joint.{o}", f"expected {len(theta)} weights")
        table.append([num(v, f"{where}.joint.{o}[{k}]") for k, v in enumerate(row)])
    try:
        return DefaultModel(space, f, x, theta, table, tol=tol)
    except FiltrationLabError as exc:
        raise ValidationError(where, str(exc), exc.witness) from None


def _parse_task(entry, i) -> dict:
    if isinstance(entry, str):
        entry = {"task": entry}
    if not isinstance(entry, dict) or "task" not in entry:
        raise ValidationError(f"tasks[{i}]", "expected a task name or an object with 'task'")
    if entry["task"] not in TASKS:
        raise ValidationError(f"tasks[{i}].task", f"unknown task {entry['task']!r}; known: {', '.join(TASKS)}")
    return dict(entry)


def load_scenario(path, tol=None) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}", {"line": exc.lineno, "column": exc.colno}) from None
    return parse_scenario(doc, tol)


# ---------------------------------------------------------------------------
# running


def _run_task(scn: Scenario, entry: dict, tol, seed) -> VerificationReport:
    task = entry["task"]
    tol = entry.get("tol", tol)
    if isinstance(tol, str):
        tol = float(tol)
    if task in ("theorem34", "theorem42"):
        if scn.enlargement is None:
            raise ValidationError("enlargement", f"task {task} needs an 'enlargement' section")
        if task == "theorem34":
            return theorem34_verify(scn.enlargement, tol)
        return theorem42_verify(scn.enlargement, tol, entry.get("d_cap", DEFAULT_D_CAP))
    if task == "multiplicity":
        name = entry.get("filtration")
        if name is not None:
            f = _lookup(scn.filtrations, name, "tasks.multiplicity.filtration")
        elif scn.enlargement is not None:
            f = scn.enlargement.joint
        else:
            f = next(iter(scn.filtrations.values()))
        return multiplicity_report(f, scn.space.measure, tol)
    if task == "kusuoka":
        if scn.default is None:
            raise ValidationError("default", "task kusuoka needs a 'default' section")
        return kusuoka_verify(scn.default, tol)
    if scn.market is None:
        raise ValidationError("market", f"task {task} needs a 'market' section")
    f, x = scn.market
    P = scn.space.measure
    if task == "minimal_measure":
        return _minimal_measure_report(x, P, f, tol)
    return _prp_report(x, P, f, tol, seed)


def _minimal_measure_report(x, P, f, tol) -> VerificationReport:
    rep = VerificationReport("minimal_measure")
    mm = minimal_martingale_measure(x, P, f, tol)
    rep.add("positive", True, density=mm.density.terminal, measure=mm.measure.weights)
    chk = is_martingale(x, mm.measure, f, tol)
    rep.add("martingale", chk.ok, witness=chk.witness, max_violation=chk.max_violation)
    return rep


def _prp_report(x, P, f, tol, seed) -> VerificationReport:
    rep = VerificationReport("prp")
    tr = prp_transfer_check(x, f, P, tol)
    rep.add("prp", tr["prp_m_under_p"], dim=tr["dim_m_under_p"], target=tr["target"])
    rep.add("transfer", tr["agree"], dim_x_under_px=tr["dim_x_under_px"], prp_x_under_px=tr["prp_x_under_px"])
    if tr["prp_m_under_p"]:
        m = doob_decomposition(x, P, f, tol).martingale_part
        rng = np.random.default_rng(0 if seed is None else seed)
        worst = nm.ZERO if P.exact else 0.0
        for _ in range(3):
            h = nm.as_array([Fraction(int(v)) for v in rng.integers(-9, 10, P.space.n)], P.exact)
            worst = max(worst, represent(h, [m], P, f, tol).residual_sq)
        tol_ = P.space.tol(tol)
        rep.add("random_targets", worst <= tol_ * tol_, max_residual=nm.sqrt(worst), targets=3)
    return rep


def _error_report(task: str, exc: Exception) -> VerificationReport:
    rep = VerificationReport(task)
    rep.add("error", False, witness=getattr(exc, "witness", None), note=f"{type(exc).__name__}: {exc}")
    return rep


def run(scn: Scenario, tasks=None, tol=None, seed=None) -> dict:
    """Execute tasks in order; a failing task never stops the others."""
    entries = scn.tasks if tasks is None else [_parse_task(t, i) for i, t in enumerate(tasks)]
    results = []
    for entry in entries:
        try:
            rep = _run_task(scn, entry, tol, seed)
        except HypothesisFailed as exc:
            rep = exc.report if exc.report is not None else _error_report(entry["task"], exc)
        except (FiltrationLabError, ValueError) as exc:
            rep = _error_report(entry["task"], exc)
        results.append(rep.to_dict())
    ok = all(r["verdict"] for r in results)
    return {
        "scenario": scn.name,
        "digest": scn.digest,
        "version": __version__,
        "seed": seed,
        "exact": scn.space.exact,
        "tasks": results,
        "verdict": ok,
        "exit_status": 0 if ok else 1,
    }


def dumps_structured(report: dict) -> str:
    return json.dumps(plain(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def dumps_text(report: dict) -> str:
    lines = [f"scenario {report['scenario'] or '<unnamed>'} (sha256 {report['digest'][:12]}, version {report['version']})"]
    for t in report["tasks"]:
        lines.append(f"{t['task']}: {'PASS' if t['verdict'] else 'FAIL'}")
        for c in t["claims"]:
            mark = "info" if c.get("informational") else ("ok" if c["verdict"] else "FAIL")
            tail = f" - {c['note']}" if c.get("note") else ""
            if c.get("witness") is not None:
                tail += f" witness={json.dumps(plain(c['witness']), sort_keys=True, ensure_ascii=False)}"
            lines.append(f"  {c['claim']:<18} {mark}{tail}")
    lines.append(f"verdict: {'PASS' if report['verdict'] else 'FAIL'}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# generation


def _frac(x: Fraction):
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _probabilities(rng: random.Random, k: int) -> list[Fraction]:
    raw = [rng.randint(1, 9) for _ in range(k)]
    s = sum(raw)
    return [Fraction(r, s) for r in raw]


def _node_increments(rng: random.Random, probs: list[Fraction]) -> list[list[Fraction]]:
    """Full-rank mean-zero increments: child j gets the vector (s_i (1{j=i} - p_i))_i."""
    k = len(probs)
    scales = [rng.randint(1, 3) for _ in range(k - 1)]
    return [[scales[i] * ((1 if j == i else 0) - probs[i]) for i in range(k - 1)] for j in range(k)]


def generate(seed: int, d: int = 2, steps: int = 1, *, branching: int = 2, drift_scale=0,
             default: bool = False, staggered: bool = False) -> dict:
    """Random scenario satisfying the relevant theorem's hypotheses by construction.

    Without ``default``: ``d`` independent margins, each revealing one
    character per time with ``branching`` outcomes. With ``default``: a market
    of ``d`` binary margins plus a default time whose hazard depends on the
    market history; ``staggered`` alternates market moves (odd times) with
    possible defaults (even times).
    """
    if not 1 <= d <= MAX_D:
        raise CapExceeded(f"d must lie in 1..{MAX_D}")
    if steps < 1 or branching < 2:
        raise CapExceeded("need steps >= 1 and branching >= 2")
    if not default and d < 2:
        raise CapExceeded("an enlargement needs d >= 2")
    atoms = branching ** (d * steps)
    if default:
        atoms *= steps + 1
    if atoms > MAX_ATOMS:
        raise CapExceeded(f"{atoms} atoms exceed the cap {MAX_ATOMS}")
    rng = random.Random(seed)
    drift_scale = Fraction(str(drift_scale))
    return (_generate_default if default else _generate_product)(rng, seed, d, steps, branching, drift_scale, staggered)


_ALPHABET = "abcdefghij"


def _grid(d: int, steps: int, branching: int) -> list[str]:
    symbols = _ALPHABET[:branching]
    groups = ["".join(g) for g in np.array(np.meshgrid(*[list(symbols)] * d, indexing="ij")).reshape(d, -1).T]
    out = [""]
    for _ in range(steps):
        out = [f"{p}.{g}" if p else g for p in out for g in groups]
    return out


def _pos(t: int, i: int, d: int) -> int:
    """Character position of margin ``i`` at time ``t`` (1-based) in a grid label."""
    return (t - 1) * (d + 1) + i


def _walk(labels, probs_by_time, incs_by_time, positions, drift):
    """Paths of a vector walk whose step at time t is indexed by the symbol at positions[t-1]."""
    paths = {}
    for o in labels:
        k = len(incs_by_time[0][0])
        cur = [Fraction(0)] * k
        row = [list(cur)]
        for t, pos in enumerate(positions):
            j = _ALPHABET.index(o[pos])
            cur = [c + v + drift[t][i] for i, (c, v) in enumerate(zip(cur, incs_by_time[t][j]))]
            row.append(list(cur))
        paths[o] = row
    return paths


def _shrink_drift(rng, incs_by_time, probs_by_time, drift_scale):
    """Pick drifts and halve them until the minimal martingale measure is positive."""
    steps = len(incs_by_time)
    k = len(incs_by_time[0][0])
    raw = [[Fraction(rng.randint(-3, 3)) for _ in range(k)] for _ in range(steps)]
    scale = drift_scale
    for _ in range(60):
        drift = [[scale * r for r in row] for row in raw]
        if _drift_ok(incs_by_time, probs_by_time, drift):
            return drift
        scale /= 2
    return [[Fraction(0)] * k for _ in range(steps)]


def _drift_ok(incs_by_time, probs_by_time, drift) -> bool:
    for incs, probs, dr in zip(incs_by_time, probs_by_time, drift):
        labels = [str(j) for j in range(len(probs))]
        sp = FiniteProbSpace(labels, probs)
        f = Filtration(sp, [Partition.trivial(sp), Partition.discrete(sp)])
        vals = [[[0] * len(dr)] * len(probs), [[v + e for v, e in zip(inc, dr)] for inc in incs]]
        try:
            minimal_martingale_measure(AdaptedProcess(f, vals), sp.measure, f)
        except FiltrationLabError:
            return False
    return True


def _product_weights(labels, prob_of):
    return {o: _frac(prob_of(o)) for o in labels}


def _generate_product(rng, seed, d, steps, branching, drift_scale, staggered):
    labels = _grid(d, steps, branching)
    margins = []
    for i in range(d):
        probs = [_probabilities(rng, branching) for _ in range(steps)]
        incs = [_node_increments(rng, p) for p in probs]
        drift = _shrink_drift(rng, incs, probs, drift_scale) if drift_scale else [[Fraction(0)] * (branching - 1)] * steps
        margins.append((probs, incs, drift))

    def prob(o):
        out = Fraction(1)
        for t in range(1, steps + 1):
            for i, (probs, _, _) in enumerate(margins):
                out *= probs[t - 1][_ALPHABET.index(o[_pos(t, i, d)])]
        return out

    filtrations, processes, names = {}, {}, []
    for i, (probs, incs, drift) in enumerate(margins):
        fname, xname = f"F{i + 1}", f"X{i + 1}"
        positions = [_pos(t, i, d) for t in range(1, steps + 1)]
        filtrations[fname] = {"product": [[p] for p in positions]}
        paths = _walk(labels, probs, incs, positions, drift)
        dim = branching - 1
        processes[xname] = {
            "filtration": fname,
            "dim": dim,
            "paths": {o: [[_frac(v) for v in row] if dim > 1 else _frac(row[0]) for row in rows] for o, rows in paths.items()},
        }
        names.append(xname)
    fnames = list(filtrations)
    filtrations["G"] = {"join": fnames}
    tasks = []
    if d == 2:
        tasks.append("theorem34")
    if branching == 2:
        tasks.append("theorem42")
    tasks.append("multiplicity")
    return {
        "schema_version": SCHEMA_VERSION,
        "name": f"generated-seed{seed}-d{d}-steps{steps}",
        "generator": {"seed": seed, "d": d, "steps": steps, "branching": branching,
                      "drift_scale": _frac(drift_scale), "default": False, "staggered": staggered},
        "outcomes": labels,
        "weights": _product_weights(labels, prob),
        "horizon": steps,
        "filtrations": filtrations,
        "processes": processes,
        "enlargement": {"filtrations": fnames, "drivers": names},
        "tasks": tasks,
    }


def _generate_default(rng, seed, d, steps, branching, drift_scale, staggered):
    joint_branch = branching ** d
    labels = _grid(d, steps, branching)
    T = 2 * steps if staggered else steps
    move_times = [2 * s - 1 for s in range(1, steps + 1)] if staggered else list(range(1, steps + 1))
    default_times = [2 * s for s in range(1, steps + 1)] if staggered else list(range(1, steps + 1))
    groups = sorted({o.split(".")[0] for o in labels})
    probs = [_probabilities(rng, joint_branch) for _ in range(steps)]
    incs = [_node_increments(rng, p) for p in probs]
    drift = _shrink_drift(rng, incs, probs, drift_scale) if drift_scale else [[Fraction(0)] * (joint_branch - 1)] * steps

    def group_index(o, s):
        return groups.index(o.split(".")[s])

    weights = {}
    paths = {}
    for o in labels:
        w = Fraction(1)
        for s in range(steps):
            w *= probs[s][group_index(o, s)]
        weights[o] = w
        cur = [Fraction(0)] * (joint_branch - 1)
        rows = [list(cur)]
        s = 0
        for t in range(1, T + 1):
            if s < steps and move_times[s] == t:
                j = group_index(o, s)
                cur = [c + v + e for c, v, e in zip(cur, incs[s][j], drift[s])]
                s += 1
            rows.append(list(cur))
        paths[o] = rows

    # hazard at each default time depends on the market prefix revealed so far
    hazards: dict = {}
    for o in labels:
        for k, t in enumerate(default_times):
            revealed = sum(1 for m in move_times if m <= t)
            key = (k, ".".join(o.split(".")[:revealed]))
            if key not in hazards:
                hazards[key] = Fraction(rng.randint(1, 5), 10)
    joint = {}
    for o in labels:
        alive = weights[o]
        row = []
        for k, t in enumerate(default_times):
            revealed = sum(1 for m in move_times if m <= t)
            h = hazards[(k, ".".join(o.split(".")[:revealed]))]
            row.append(_frac(alive * h))
            alive *= 1 - h
        row.append(_frac(alive))
        joint[o] = row

    # market filtration: the group revealed at each move time stays known afterwards
    blocks = [[list(labels)]]
    for t in range(1, T + 1):
        revealed = sum(1 for m in move_times if m <= t)
        cells: dict = {}
        for o in labels:
            cells.setdefault(".".join(o.split(".")[:revealed]), []).append(o)
        blocks.append(list(cells.values()))
    dim = joint_branch - 1
    return {
        "schema_version": SCHEMA_VERSION,
        "name": f"generated-default-seed{seed}-d{d}-steps{steps}{'-staggered' if staggered else ''}",
        "generator": {"seed": seed, "d": d, "steps": steps, "branching": branching,
                      "drift_scale": _frac(drift_scale), "default": True, "staggered": staggered},
        "outcomes": labels,
        "weights": {o: _frac(w) for o, w in weights.items()},
        "horizon": T,
        "filtrations": {"F": {"blocks": blocks}},
        "processes": {
            "X": {
                "filtration": "F",
                "dim": dim,
                "paths": {o: [[_frac(v) for v in row] if dim > 1 else _frac(row[0]) for row in rows] for o, rows in paths.items()},
            }
        },
        "market": {"filtration": "F", "processes": ["X"]},
        "default": {
            "market_filtration": "F",
            "market_processes": ["X"],
            "theta": default_times + ["inf"],
            "joint": joint,
        },
        "tasks": ["kusuoka"],
    }


def dumps_scenario(doc: dict) -> str:
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def write_scenario(doc: dict, path) -> None:
    Path(path).write_text(dumps_scenario(doc), encoding="utf-8")
