"""Batch front-end: YAML run specifications in, deterministic CSV out.

One subcommand per mode.  The input file is a YAML document whose exact
field names are frozen in the project README; complex numbers are given
as [re, im] pairs, operators either as matrices of such pairs or as the
shorthands sigma_x, sigma_y, sigma_z, identity(n), zero(n).  Output is
CSV with a header row, LF line endings and 12 significant digits, byte
identical for identical spec and seed.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import (
    ParseError,
    SeqMeasError,
    ValidationError,
)
from .generators import random_schedule
from .hilbert import Evolution, spectral_decompose
from .joint import (
    JointGateSetup,
    JointPointerSetup,
    bessel_distribution,
    gate_joint_probabilities,
    pointer_joint_distribution,
)
from .paths import Schedule, probability_table, sample_outcomes
from .probes import run_composite_gates
from .reality import verify_cr_insertions
from .weak import (
    WeakGateConfig,
    WeakPointerConfig,
    weak_gate_distribution,
    weak_pointer_mean,
)

MODES = (
    "probs",
    "verify-equivalence",
    "reality",
    "joint-gate-scan",
    "joint-pointer-map",
    "bessel-map",
    "weak-gate",
    "weak-mean",
)

_NAMED_STATES = {
    "up_x": np.array([1.0, 1.0]) / np.sqrt(2.0),
    "down_x": np.array([1.0, -1.0]) / np.sqrt(2.0),
    "up_y": np.array([1.0, 1.0j]) / np.sqrt(2.0),
    "down_y": np.array([1.0, -1.0j]) / np.sqrt(2.0),
    "up_z": np.array([1.0, 0.0]),
    "down_z": np.array([0.0, 1.0]),
}

_NAMED_OPERATORS = {
    "sigma_x": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "sigma_y": np.array([[0.0, -1.0j], [1.0j, 0.0]]),
    "sigma_z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


@dataclass(eq=False)
class RunSpec:
    """A parsed run: the mode, the resolved inputs, and numeric overrides."""

    mode: str
    payload: dict[str, Any]
    output: Path
    seed: int = 0
    tolerance: float = 1e-10


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _fail(fieldname: str, message: str):
    raise ParseError(f"field '{fieldname}': {message}")


def _parse_complex(value, fieldname: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(x, (int, float)) for x in value
    ):
        return complex(value[0], value[1])
    _fail(fieldname, f"expected a number or [re, im] pair, got {value!r}")


def _parse_operator(value, fieldname: str) -> np.ndarray:
    if isinstance(value, str):
        name = value.strip()
        if name in _NAMED_OPERATORS:
            return _NAMED_OPERATORS[name].copy()
        m = re.fullmatch(r"(identity|zero)\((\d+)\)", name)
        if m:
            dim = int(m.group(2))
            if dim < 1:
                _fail(fieldname, "dimension must be >= 1")
            return np.eye(dim, dtype=complex) if m.group(1) == "identity" else np.zeros(
                (dim, dim), dtype=complex
            )
        _fail(
            fieldname,
            f"unknown operator shorthand {name!r}; use sigma_x|sigma_y|sigma_z|"
            "identity(n)|zero(n) or an explicit matrix",
        )
    if isinstance(value, list):
        try:
            rows = [
                [_parse_complex(x, fieldname) for x in row] for row in value
            ]
        except TypeError:
            _fail(fieldname, "matrix rows must be lists")
        arr = np.array(rows, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            _fail(fieldname, f"matrix must be square, got shape {arr.shape}")
        return arr
    _fail(fieldname, f"cannot interpret {value!r} as an operator")


def _parse_state(value, fieldname: str) -> np.ndarray:
    if isinstance(value, str):
        name = value.strip()
        if name in _NAMED_STATES:
            return _NAMED_STATES[name].astype(complex)
        _fail(fieldname, f"unknown state {name!r}; use up_x|down_x|...|down_z")
    if isinstance(value, list):
        vec = np.array([_parse_complex(x, fieldname) for x in value])
        return vec
    _fail(fieldname, f"cannot interpret {value!r} as a state")


def _parse_schedule(section, fieldname: str = "schedule") -> Schedule:
    if not isinstance(section, dict):
        _fail(fieldname, "must be a mapping")
    for required in ("times", "observables", "prep_index"):
        if required not in section:
            _fail(fieldname, f"missing key '{required}'")
    times = section["times"]
    if not isinstance(times, list) or not all(
        isinstance(t, (int, float)) for t in times
    ):
        _fail(f"{fieldname}.times", "must be a list of numbers")
    raw_obs = section["observables"]
    if not isinstance(raw_obs, list) or not raw_obs:
        raise ValidationError("observables must be a non-empty list")
    tol = float(section.get("degeneracy_tol", 1e-9))
    observables = tuple(
        spectral_decompose(
            _parse_operator(o, f"{fieldname}.observables[{i}]"), degeneracy_tol=tol
        )
        for i, o in enumerate(raw_obs)
    )
    dim = observables[0].dim
    ham = section.get("hamiltonian", "zero")
    if isinstance(ham, str) and ham.strip() == "zero":
        evolution = Evolution.zero(dim)
    else:
        evolution = Evolution(_parse_operator(ham, f"{fieldname}.hamiltonian"))
    return Schedule(
        times=tuple(float(t) for t in times),
        observables=observables,
        evolution=evolution,
        prep_index=int(section["prep_index"]),
    )


def _parse_grid(section, fieldname: str = "grid") -> np.ndarray:
    if not isinstance(section, dict):
        _fail(fieldname, "must be a mapping with min/max/points")
    lo = float(section.get("min", -1.5))
    hi = float(section.get("max", 1.5))
    points = int(section.get("points", 81))
    if points < 2 or hi <= lo:
        _fail(fieldname, "need points >= 2 and max > min")
    return np.linspace(lo, hi, points)


def _parse_beta_values(section) -> list[float]:
    if "betas" in section:
        values = [float(b) for b in section["betas"]]
    elif "beta_grid" in section:
        g = section["beta_grid"]
        start, stop = float(g.get("start", -1.0)), float(g.get("stop", 1.0))
        step = float(g.get("step", 0.01))
        if step <= 0:
            _fail("beta_grid.step", "must be positive")
        count = int(round((stop - start) / step))
        values = [round(start + i * step, 12) for i in range(count + 1)]
    else:
        values = [float(section.get("beta", 0.0))]
    for b in values:
        if not -1.0 <= b <= 1.0:
            raise ValidationError(f"beta {b} outside [-1, 1]")
    return values


def parse_spec(path, mode: str | None = None, output=None) -> RunSpec:
    """Load and validate a YAML run specification.

    ``mode`` (from the subcommand) must agree with the file's mode field
    when both are given.  Raises :class:`ParseError` for malformed files
    and :class:`ValidationError` for structurally invalid inputs.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"input file {path} does not exist")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ParseError(f"malformed YAML{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("run specification must be a YAML mapping")

    file_mode = doc.get("mode")
    if mode is None:
        mode = file_mode
    if mode is None:
        raise ParseError("no mode given (neither subcommand nor file)")
    if file_mode is not None and file_mode != mode:
        raise ParseError(f"file mode {file_mode!r} conflicts with subcommand {mode!r}")
    if mode not in MODES:
        raise ParseError(f"unknown mode {mode!r}")

    out = output or doc.get("output")
    if out is None:
        raise ParseError("no output path (use --output or the 'output' key)")
    return RunSpec(
        mode=mode,
        payload=doc,
        output=Path(out),
        seed=int(doc.get("seed", 0)),
        tolerance=float(doc.get("tolerance", 1e-10)),
    )


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.12g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


# ---------------------------------------------------------------------------
# Mode runners; each returns a process exit code
# ---------------------------------------------------------------------------

def _run_probs(spec: RunSpec) -> int:
    schedule = _parse_schedule(spec.payload.get("schedule"))
    table = probability_table(schedule)
    samples = int(spec.payload.get("samples", 0))
    freq = sample_outcomes(schedule, samples, spec.seed) if samples else None
    header = [f"m{i}" for i in range(schedule.level_count + 1)] + ["probability"]
    if freq is not None:
        header.append("frequency")
    rows = []
    for key in sorted(table.entries):
        row = list(key) + [table.entries[key]]
        if freq is not None:
            row.append(freq.get(key, 0.0))
        rows.append(row)
    _write_csv(spec.output, header, rows)
    return 0


def _verify_one(schedule: Schedule, label: str, tol: float, rows: list) -> bool:
    table_sum = probability_table(schedule, method="sum")
    table_chain = probability_table(schedule, method="chain")
    table_gate = run_composite_gates(schedule)
    checks = [
        ("normalization", abs(table_sum.total() - 1.0)),
        ("route_equivalence", table_sum.max_abs_diff(table_chain)),
        ("gate_equivalence", table_sum.max_abs_diff(table_gate)),
    ]
    ok = True
    for name, dev in checks:
        status = "PASS" if dev < tol else "FAIL"
        ok = ok and status == "PASS"
        rows.append([label, name, dev, tol, status])
    return ok


def _run_verify_equivalence(spec: RunSpec) -> int:
    rows: list = []
    ok = True
    tol = spec.tolerance
    if "schedule" in spec.payload:
        schedule = _parse_schedule(spec.payload["schedule"])
        ok = _verify_one(schedule, "schedule", tol, rows)
    elif "random_schedules" in spec.payload:
        section = spec.payload["random_schedules"]
        count = int(section.get("count", 20))
        seed = int(section.get("seed", spec.seed))
        dims = [int(d) for d in section.get("dims", [2, 3, 4])]
        max_levels = int(section.get("max_levels", 4))
        rng = np.random.default_rng(seed)
        for i in range(count):
            dim = int(rng.choice(dims))
            levels = int(rng.integers(1, max_levels + 1))
            schedule = random_schedule(rng, dim, levels)
            ok = _verify_one(schedule, f"random[{i}]", tol, rows) and ok
    else:
        raise ParseError("verify-equivalence needs 'schedule' or 'random_schedules'")
    _write_csv(
        spec.output, ["schedule", "check", "max_deviation", "tolerance", "status"], rows
    )
    return 0 if ok else 1


def _run_reality(spec: RunSpec) -> int:
    schedule = _parse_schedule(spec.payload.get("schedule"))
    raw = spec.payload.get("insertions")
    if not isinstance(raw, list) or not raw:
        raise ParseError("reality mode needs a non-empty 'insertions' list")
    insertions = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or "time" not in item or "which" not in item:
            _fail(f"insertions[{i}]", "needs 'time' and 'which'")
        t = float(item["time"])
        which = str(item["which"])
        if "segment" in item:
            ell = int(item["segment"])
        else:
            candidates = [
                k
                for k in range(schedule.level_count)
                if schedule.times[k] < t < schedule.times[k + 1]
            ]
            if not candidates:
                _fail(f"insertions[{i}].time", f"{t} not inside any interval")
            ell = candidates[0]
        insertions.append((ell, t, which))
    expect = str(spec.payload.get("expect", "preserved"))
    if expect not in ("preserved", "broken"):
        raise ParseError("expect must be 'preserved' or 'broken'")
    report = verify_cr_insertions(schedule, insertions)
    tol = spec.tolerance if expect == "preserved" else float(
        spec.payload.get("broken_threshold", 1e-3)
    )
    rows = []
    if expect == "preserved":
        dev_ok = report.max_deviation < tol
        cert_ok = report.min_certainty > 1.0 - tol
        rows.append(["marginal_deviation", report.max_deviation, tol, "PASS" if dev_ok else "FAIL"])
        rows.append(["min_certainty", report.min_certainty, 1.0 - tol, "PASS" if cert_ok else "FAIL"])
        ok = dev_ok and cert_ok
    else:
        dev_ok = report.max_deviation > tol
        rows.append(["marginal_deviation", report.max_deviation, tol, "PASS" if dev_ok else "FAIL"])
        rows.append(["min_certainty", report.min_certainty, "", ""])
        ok = dev_ok
    rows.append(["skipped_branches", report.skipped_branches, "", ""])
    _write_csv(spec.output, ["check", "value", "threshold", "status"], rows)
    return 0 if ok else 1


def _joint_setup_states(spec: RunSpec) -> tuple[np.ndarray, np.ndarray]:
    section = spec.payload.get("setup")
    if not isinstance(section, dict):
        raise ParseError("joint modes need a 'setup' mapping with prep/post")
    prep = _parse_state(section.get("prep", "up_x"), "setup.prep")
    post = _parse_state(section.get("post", "up_y"), "setup.post")
    return prep, post


def _run_joint_gate_scan(spec: RunSpec) -> int:
    prep, post = _joint_setup_states(spec)
    betas = _parse_beta_values(spec.payload)
    rows = []
    for beta in betas:
        probs = gate_joint_probabilities(JointGateSetup.from_pre_post(prep, post, beta))
        rows.append([beta, probs[0, 0], probs[0, 1], probs[1, 0], probs[1, 1]])
    _write_csv(spec.output, ["beta", "P11", "P12", "P21", "P22"], rows)
    return 0


def _run_joint_pointer_map(spec: RunSpec) -> int:
    prep, post = _joint_setup_states(spec)
    betas = _parse_beta_values(spec.payload)
    width = float(spec.payload.get("width", 0.05))
    steps = int(spec.payload.get("steps", 64))
    grid = _parse_grid(spec.payload.get("grid", {}))
    multi = len(betas) > 1
    header = (["beta"] if multi else []) + ["f1", "f2", "P"]
    rows = []
    for beta in betas:
        setup = JointPointerSetup.from_pre_post(
            prep, post, beta, width=width, steps=steps
        )
        dist = pointer_joint_distribution(setup, grid, grid)
        for i, a in enumerate(grid):
            for j, b in enumerate(grid):
                rows.append(([beta] if multi else []) + [a, b, dist[i, j]])
    _write_csv(spec.output, header, rows)
    return 0


def _run_bessel_map(spec: RunSpec) -> int:
    prep, post = _joint_setup_states(spec)
    width = float(spec.payload.get("width", 0.05))
    grid = _parse_grid(spec.payload.get("grid", {}))
    setup = JointPointerSetup.from_pre_post(prep, post, 0.0, width=width)
    dist = bessel_distribution(setup, grid, grid)
    rows = [
        [a, b, dist[i, j]]
        for i, a in enumerate(grid)
        for j, b in enumerate(grid)
    ]
    _write_csv(spec.output, ["f1", "f2", "P"], rows)
    return 0


def _run_weak_gate(spec: RunSpec) -> int:
    schedule = _parse_schedule(spec.payload.get("schedule"))
    observable = spectral_decompose(
        _parse_operator(spec.payload.get("observable"), "observable")
    )
    config = WeakGateConfig(
        observable=observable,
        time=float(spec.payload.get("t_prime", 0.5)),
        strength=float(spec.payload.get("strength", 0.1)),
    )
    split = weak_gate_distribution(schedule, config)
    base = probability_table(schedule).final_marginal()
    known = weak_gate_distribution(
        schedule, WeakGateConfig(observable, config.time, np.pi / 2)
    ).combined_final
    g2 = config.strength**2
    rows = []
    for m in sorted(split.combined_final):
        exact = split.combined_final[m]
        mixture = (1.0 - g2) * base.get(m, 0.0) + g2 * known.get(m, 0.0)
        rows.append([m, exact, base.get(m, 0.0), known.get(m, 0.0), mixture, exact - mixture])
    _write_csv(
        spec.output,
        ["outcome", "p_exact", "p_undetected_curve", "p_detected_curve", "p_mixture", "residual"],
        rows,
    )
    return 0


def _run_weak_mean(spec: RunSpec) -> int:
    schedule = _parse_schedule(spec.payload.get("schedule"))
    observable = spectral_decompose(
        _parse_operator(spec.payload.get("observable"), "observable")
    )
    conditioning = spec.payload.get("conditioning")
    if not isinstance(conditioning, list):
        raise ParseError("weak-mean needs a 'conditioning' outcome list")
    config = WeakPointerConfig(
        observable=observable,
        time=float(spec.payload.get("t_prime", 0.5)),
        strength=float(spec.payload.get("strength", 0.01)),
        width=float(spec.payload.get("width", 1.0)),
    )
    report = weak_pointer_mean(schedule, config, tuple(conditioning))
    _write_csv(
        spec.output,
        [
            "mean_reading",
            "exact_mean",
            "numerator_re",
            "numerator_im",
            "denominator_re",
            "denominator_im",
            "imag_part",
            "strength",
            "width",
        ],
        [
            [
                report.mean_reading,
                report.exact_mean,
                report.amplitude_numerator.real,
                report.amplitude_numerator.imag,
                report.amplitude_denominator.real,
                report.amplitude_denominator.imag,
                report.imag_part,
                report.strength,
                report.width,
            ]
        ],
    )
    return 0


_RUNNERS = {
    "probs": _run_probs,
    "verify-equivalence": _run_verify_equivalence,
    "reality": _run_reality,
    "joint-gate-scan": _run_joint_gate_scan,
    "joint-pointer-map": _run_joint_pointer_map,
    "bessel-map": _run_bessel_map,
    "weak-gate": _run_weak_gate,
    "weak-mean": _run_weak_mean,
}


def run(spec: RunSpec) -> int:
    """Execute a parsed run specification; returns the exit code."""
    return _RUNNERS[spec.mode](spec)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="seqmeas",
        description="Consecutive-measurement statistics: tables, maps and verifications.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run a '{mode}' specification")
        p.add_argument("--input", required=True, help="YAML run specification")
        p.add_argument("--output", default=None, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="sampling seed override")
        p.add_argument(
            "--tolerance", type=float, default=None, help="verification tolerance"
        )
    args = parser.parse_args(argv)
    try:
        spec = parse_spec(args.input, mode=args.mode, output=args.output)
        if args.seed is not None:
            spec.seed = args.seed
        if args.tolerance is not None:
            spec.tolerance = args.tolerance
        return run(spec)
    except SeqMeasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
