"""Command-line entry point: ``anomalyflow {verify, flow, root}``.

Exit codes: 0 success (a detected blow-up is a finding, not a failure),
1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .flow import FlowConfig, build_initial_balanced, run_flow

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class InputError(ValueError):
    """Malformed user input; the message already carries file and line."""


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_CONFIG_TYPES = {
    "N": int, "active_dims": "dims", "eps": float, "potential": str, "dt_policy": str,
    "cfl_c": float, "dt": float, "t_end": float, "alpha_prime": float, "omega_floor": float,
    "f_max": float, "output_every": int, "seed": int,
}


def _convert(key: str, raw: str):
    kind = _CONFIG_TYPES[key]
    if kind == "dims":
        dims = tuple(d.strip() for d in raw.split(",") if d.strip())
        if not dims:
            raise ValueError("expected a comma-separated list such as x1,x2")
        return dims
    if kind is int:
        return int(raw)
    if kind is float:
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value
    return raw


def parse_config(text: str, source: str = "<config>") -> tuple[FlowConfig, dict[str, int]]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Returns the config and the line number of every key that was set.

    Raises
    ------
    InputError
        On unknown or repeated keys, missing ``=``, bad values or a config
        that fails validation.
    """
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise InputError(f"{source}:{lineno}: expected key = value, got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _CONFIG_TYPES:
            raise InputError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise InputError(f"{source}:{lineno}: key {key!r} repeated (first set on line {lines[key]})")
        if not raw:
            raise InputError(f"{source}:{lineno}: empty value for {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise InputError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
        lines[key] = lineno
    config = FlowConfig(**values)
    try:
        config.validate()
    except ValueError as exc:
        raise InputError(f"{source}: {exc}") from None
    return config, lines


# ---------------------------------------------------------------------------
# form files
# ---------------------------------------------------------------------------

def _parse_complex(token: str) -> complex:
    if ":" in token:
        re_, im_ = token.split(":", 1)
        return complex(float(re_), float(im_))
    return complex(float(token), 0.0)


def _parse_indices(token: str, m: int) -> tuple[int, ...]:
    if token == "-":
        return ()
    if not token.isdigit():
        raise ValueError(f"indices must be digits 1..{m}, got {token!r}")
    idx = tuple(int(c) - 1 for c in token)
    if any(not 0 <= i < m for i in idx):
        raise ValueError(f"index out of range 1..{m} in {token!r}")
    if list(idx) != sorted(set(idx)):
        raise ValueError(f"indices must be strictly increasing, got {token!r}")
    return idx


def read_form(text: str, m: int, p: int, source: str = "<form>"):
    """Parse a (p,p)-form from ``<unbarred> <barred> re:im`` lines.

    Indices are 1-based digit strings in increasing order (``-`` for the
    empty index set); the value is the component on ``dz^J ^ dzbar^K``.
    """
    from .forms import FormPQ, combos

    entries: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 3:
            raise InputError(f"{source}:{lineno}: expected '<unbarred> <barred> re:im', got {body!r}")
        try:
            J, K = _parse_indices(parts[0], m), _parse_indices(parts[1], m)
            value = _parse_complex(parts[2])
        except ValueError as exc:
            raise InputError(f"{source}:{lineno}: {exc}") from None
        if len(J) != p or len(K) != p:
            raise InputError(f"{source}:{lineno}: expected {p} unbarred and {p} barred indices "
                             f"for a ({p},{p})-form in dimension {m}")
        if (J, K) in entries:
            raise InputError(f"{source}:{lineno}: component {parts[0]} {parts[1]} repeated")
        entries[(J, K)] = value
    coeffs = np.zeros((math.comb(m, p), math.comb(m, p)), dtype=complex)
    row = {c: i for i, c in enumerate(combos(m, p))}
    for (J, K), v in entries.items():
        coeffs[row[J], row[K]] = v
    return FormPQ.from_basis(m, p, p, coeffs)


def format_form(form) -> str:
    """Inverse of :func:`read_form`; every component is written."""
    from .forms import combos

    out = []
    basis = form.basis()
    for a, J in enumerate(combos(form.m, form.p)):
        for b, K in enumerate(combos(form.m, form.q)):
            v = basis[a, b] + 0.0  # drop negative zeros
            js = "".join(str(i + 1) for i in J) or "-"
            ks = "".join(str(i + 1) for i in K) or "-"
            out.append(f"{js} {ks} {v.real:.17g}:{v.imag:.17g}")
    return "\n".join(out) + "\n"


def read_metric(text: str, m: int, source: str = "<metric>") -> np.ndarray:
    """``m`` rows of ``m`` entries ``re:im`` giving ``g[kbar, j]``."""
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            row = [_parse_complex(tok) for tok in body.split()]
        except ValueError as exc:
            raise InputError(f"{source}:{lineno}: {exc}") from None
        if len(row) != m:
            raise InputError(f"{source}:{lineno}: expected {m} entries, got {len(row)}")
        rows.append(row)
    if len(rows) != m:
        raise InputError(f"{source}: expected {m} rows, got {len(rows)}")
    g = np.array(rows, dtype=complex)
    if np.abs(g - g.conj().T).max() > 1e-12 * max(1.0, np.abs(g).max()):
        raise InputError(f"{source}: metric is not Hermitian")
    if np.linalg.eigvalsh(g)[0] <= 0:
        raise InputError(f"{source}: metric is not positive definite")
    return g


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _write_manifest(out_dir: Path, manifest: dict) -> Path:
    path = out_dir / "manifest.json"
    manifest["artifacts"] = sorted(set(manifest.get("artifacts", [])) | {str(path)})
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def cmd_verify(args) -> int:
    from .verify import FAULTS, run_verification

    if args.trials < 0:
        raise InputError("--trials must be non-negative")
    if args.inject_fault is not None and args.inject_fault not in FAULTS:
        raise InputError(f"unknown fault {args.inject_fault!r}")
    report = run_verification(args.seed, args.trials, args.inject_fault)
    for line in report.lines():
        print(line)
    failed = report.failures()
    n_pass = len(report.entries) - len(failed)
    print(f"{n_pass} passed, {len(failed)} failed (seed {args.seed}, trials {args.trials})")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(out, {
            "command": "verify", "seed": args.seed, "trials": args.trials,
            "outcome": "passed" if not failed else "failed",
            "suite": {"passed": n_pass, "failed": len(failed), "failures": failed},
            "residuals": {k: {"value": r.value, "tol": r.tol} for k, r in report.entries.items()},
            "version": __version__,
        })
    if failed:
        print(f"verification failed for seed {args.seed}: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def write_diagnostics_csv(path: Path, samples) -> None:
    from .diagnostics import CSV_COLUMNS

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in samples:
            w.writerow([repr(float(v)) for v in s.row()])


def cmd_flow(args) -> int:
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from None
    config, lines = parse_config(text, str(path))
    if args.seed is not None:
        config.seed = args.seed
    try:
        state, _ = build_initial_balanced(config)
    except ValueError as exc:
        where = f":{lines['potential']}" if "potential" in lines else ""
        raise InputError(f"{path}{where}: {exc}") from None
    result = run_flow(config, state)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "diagnostics.csv"
    write_diagnostics_csv(csv_path, result.samples)
    first, last = result.samples[0], result.samples[-1]
    manifest = {
        "command": "flow",
        "config": config.to_dict(),
        "outcome": result.outcome,
        "final_t": result.state.t,
        "steps": result.steps,
        "samples": len(result.samples),
        "message": result.message,
        "log": result.log,
        "artifacts": [str(csv_path)],
        "suite": {"passed": 0, "failed": 0},
        "summary": {"T2_max_initial": first.T2_max, "T2_max_final": last.T2_max,
                    "omega_norm_min_final": last.omega_norm_min,
                    "balanced_residual_final": last.balanced_residual},
        "version": __version__,
    }
    _write_manifest(out, manifest)
    print(f"outcome {result.outcome} at t={result.state.t:.6g} after {result.steps} steps; "
          f"wrote {csv_path}")
    for entry in result.log:
        print(entry)
    return EXIT_OK


def cmd_root(args) -> int:
    from .forms import HermitianPointMetric, omega_power, wedge
    from .roots import solve_root

    m = args.m
    if m not in (2, 3, 4):
        raise InputError("--m must be 2, 3 or 4")
    try:
        text = Path(args.input).read_text()
        metric_text = Path(args.metric).read_text() if args.metric else None
    except OSError as exc:
        raise InputError(f"cannot read input: {exc}") from None
    Phi = read_form(text, m, m - 1, args.input)
    g = HermitianPointMetric(read_metric(metric_text, m, args.metric) if metric_text
                             else np.eye(m, dtype=complex))
    phi = solve_root(Phi, g)
    residual = (wedge(phi, omega_power(g, m - 2)) - Phi).max_abs()
    body = format_form(phi) + f"# wedge-back residual {residual:.3e}\n"
    if args.output:
        Path(args.output).write_text(body)
    else:
        sys.stdout.write(body)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anomalyflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity and oracle-equivalence suites")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=10, help="random cases per family (0: deterministic only)")
    v.add_argument("--out-dir", default=None, help="also write manifest.json here")
    v.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("flow", help="integrate the flow from a key=value config")
    f.add_argument("--config", required=True)
    f.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    f.add_argument("--out-dir", default="out")
    f.set_defaults(func=cmd_flow)

    r = sub.add_parser("root", help="solve phi ^ omega^(m-2) = Phi for a (m-1,m-1)-form")
    r.add_argument("input", help="form file: '<unbarred> <barred> re:im' per line")
    r.add_argument("--m", type=int, default=3)
    r.add_argument("--metric", default=None, help="metric file (default: flat)")
    r.add_argument("--output", "-o", default=None)
    r.set_defaults(func=cmd_root)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
